// pixelcert CLI: train the toy model, certify attribution maps, evaluate
// localization grids and deletion faithfulness, re-render report images.
//
// Exit codes: 0 success, 2 usage/config error, 1 runtime error.
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "pixelcert/pipeline.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "Path to the run configuration (JSON)")
      ->required();
  cmd->add_option("--seed", opts.seed, "Override smoothing.master_seed")
      ->each([&opts](const std::string&) { opts.seed_set = true; });
  cmd->add_option("--jobs", opts.jobs, "Worker threads (env PIXELCERT_JOBS as fallback)");
  cmd->add_option("--out", opts.out_dir, "Directory for the report and images");
}

pixelcert::RunConfig resolve_config(const CommonOpts& opts) {
  pixelcert::RunConfig cfg = pixelcert::load_config(opts.config_path);
  if (opts.seed_set) cfg.smoothing.master_seed = opts.seed;
  if (opts.jobs > 0) {
    cfg.jobs = opts.jobs;
  } else if (const char* env = std::getenv("PIXELCERT_JOBS")) {
    const int j = std::atoi(env);
    if (j > 0) cfg.jobs = j;
  }
  if (!opts.out_dir.empty()) {
    const std::filesystem::path out(opts.out_dir);
    if (std::filesystem::path(cfg.report_path).is_relative())
      cfg.report_path = (out / cfg.report_path).string();
    if (std::filesystem::path(cfg.image_dir).is_relative())
      cfg.image_dir = (out / cfg.image_dir).string();
  }
  cfg.validate();
  return cfg;
}

int run_train_toy(int epochs, double lr, std::uint64_t seed, int train_count, int hidden,
                  std::uint64_t data_seed, const std::string& out_path) {
  pixelcert::ShapeDataset ds;
  ds.seed = data_seed;

  pixelcert::TrainOptions opt;
  opt.epochs = epochs;
  opt.lr = lr;
  opt.seed = seed;
  opt.train_count = train_count;
  opt.hidden = hidden;

  const pixelcert::ToyClassifier model = pixelcert::train(ds, opt);
  if (const auto dir = std::filesystem::path(out_path).parent_path(); !dir.empty())
    std::filesystem::create_directories(dir);
  model.save(out_path);

  const double train_acc = pixelcert::accuracy(model, ds, 0, opt.train_count);
  const double held_acc = pixelcert::accuracy(model, ds, 100000, 200);
  std::printf("model saved to %s\n", out_path.c_str());
  std::printf("train accuracy: %.4f (%d samples)\n", train_acc, opt.train_count);
  std::printf("held-out accuracy: %.4f (200 samples)\n", held_acc);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pixel-level certification of attribution maps via randomized smoothing"};
  app.require_subcommand(1);

  auto* train_cmd = app.add_subcommand("train-toy", "Train the toy shape classifier");
  int epochs = 20, train_count = 1000, hidden = 128;
  double lr = 0.05;
  std::uint64_t train_seed = 1, data_seed = 1;
  std::string model_out;
  train_cmd->add_option("--epochs", epochs, "Training epochs")->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", lr, "Learning rate");
  train_cmd->add_option("--seed", train_seed, "Init/shuffle seed");
  train_cmd->add_option("--data-seed", data_seed, "Dataset seed");
  train_cmd->add_option("--train-count", train_count, "Training set size");
  train_cmd->add_option("--hidden", hidden, "Hidden layer width");
  train_cmd->add_option("--out", model_out, "Output model file")->required();

  CommonOpts certify_opts, gridpg_opts, faith_opts;
  auto* certify = app.add_subcommand("certify", "Certify attribution maps per pixel");
  add_common(certify, certify_opts);
  auto* gridpg = app.add_subcommand("gridpg", "Certified localization on class grids");
  add_common(gridpg, gridpg_opts);
  auto* faith = app.add_subcommand("faithfulness", "Deletion-based faithfulness curves");
  add_common(faith, faith_opts);

  auto* render = app.add_subcommand("render", "Re-render images from a report");
  std::string report_path, render_out = "render";
  render->add_option("--report", report_path, "Report JSON from a previous run")->required();
  render->add_option("--out", render_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  }

  try {
    if (train_cmd->parsed())
      return run_train_toy(epochs, lr, train_seed, train_count, hidden, data_seed, model_out);
    if (certify->parsed()) {
      pixelcert::run_certify(resolve_config(certify_opts));
      return 0;
    }
    if (gridpg->parsed()) {
      pixelcert::run_gridpg(resolve_config(gridpg_opts));
      return 0;
    }
    if (faith->parsed()) {
      pixelcert::run_faithfulness(resolve_config(faith_opts));
      return 0;
    }
    if (render->parsed()) {
      pixelcert::run_render(report_path, render_out);
      return 0;
    }
  } catch (const pixelcert::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
