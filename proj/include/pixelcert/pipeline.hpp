// Config-driven runs wiring dataset, model, attribution, certification,
// metrics and rendering together. Reports are JSON with a stable key order;
// the effective (defaults-merged) config is echoed into every report so a
// run can be reproduced from its own output.
#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pixelcert/attribution.hpp"
#include "pixelcert/gridharness.hpp"
#include "pixelcert/metrics.hpp"
#include "pixelcert/render.hpp"
#include "pixelcert/smoothing.hpp"
#include "pixelcert/toymodel.hpp"

namespace pixelcert {

using nlohmann::json;

inline constexpr int kReportSchemaVersion = 1;

// Configuration problems exit with code 2; runtime failures with 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MethodConfig {
  Method method = Method::kGrad;
  ScoreType score = ScoreType::kProbability;
  RiseParams rise;
  OcclusionParams occlusion;
  int intgrad_steps = 32;
  StubRect stub_rect{0, 0, 32, 32};
  std::uint64_t seed = 0;
};

struct RunConfig {
  std::string model_path;
  ShapeDataset dataset;
  int images_start = 10000;
  int images_count = 2;
  std::vector<int> image_indices;  // explicit list wins over start/count
  MethodConfig method;
  SmoothingConfig smoothing;
  std::vector<double> k_list{5.0, 10.0, 25.0, 50.0};
  std::string report_path = "report.json";
  std::string image_dir = "images";
  int grid_count = 20;
  int grid_dim = 2;
  double grid_k_percent = 50.0;
  double confidence_min = 0.99;
  std::uint64_t grid_seed = 0;
  int grid_scan_start = 200000;
  std::vector<double> k_schedule{5.0, 10.0, 25.0, 50.0};
  double fill = 0.0;
  int jobs = 1;

  std::vector<int> resolve_indices() const {
    if (!image_indices.empty()) return image_indices;
    std::vector<int> out;
    for (int i = 0; i < images_count; ++i) out.push_back(images_start + i);
    return out;
  }

  void validate() const {
    smoothing.validate();
    if (k_list.empty()) throw ConfigError("config: k_percent list must be non-empty");
    for (std::size_t i = 0; i < k_list.size(); ++i) {
      if (!(k_list[i] > 0.0 && k_list[i] <= 100.0))
        throw ConfigError("config: k_percent entries must be in (0, 100]");
      if (i > 0 && k_list[i] <= k_list[i - 1])
        throw ConfigError("config: k_percent list must be ascending");
    }
    for (std::size_t i = 1; i < k_schedule.size(); ++i)
      if (k_schedule[i] <= k_schedule[i - 1])
        throw ConfigError("config: faithfulness k_schedule must be ascending");
    if (images_count < 1 && image_indices.empty())
      throw ConfigError("config: images.count must be >= 1");
    if (grid_count < 1) throw ConfigError("config: grid.count must be >= 1");
    if (jobs < 1) throw ConfigError("config: jobs must be >= 1");
    if (!is_stub(method.method) && model_path.empty())
      throw ConfigError("config: model_path required for method '" +
                        std::string(method_name(method.method)) + "'");
  }
};

namespace detail {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

inline Correction correction_from_name(const std::string& name) {
  if (name == "bonferroni") return Correction::kBonferroni;
  if (name == "holm") return Correction::kHolm;
  throw ConfigError("config: unknown correction '" + name + "'");
}

inline ScoreType score_from_name(const std::string& name) {
  if (name == "probability") return ScoreType::kProbability;
  if (name == "logit") return ScoreType::kLogit;
  throw ConfigError("config: unknown score type '" + name + "'");
}

inline std::string fmt_k(double k) {
  std::ostringstream os;
  os << k;
  std::string s = os.str();
  for (char& c : s)
    if (c == '.') c = 'p';
  return s;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string labels_to_string(const CertifiedMap& cert) {
  std::string s;
  s.reserve(cert.labels.size());
  for (PixelLabel l : cert.labels) {
    s.push_back(l == PixelLabel::kOne ? '1' : (l == PixelLabel::kZero ? '0' : 'a'));
  }
  return s;
}

inline CertifiedMap cert_from_labels(const std::string& labels, int height, int width,
                                     double k_percent) {
  if (labels.size() != static_cast<std::size_t>(height) * width)
    throw ConfigError("report: labels length does not match dimensions");
  CertifiedMap cert;
  cert.height = height;
  cert.width = width;
  cert.k_percent = k_percent;
  cert.labels.reserve(labels.size());
  for (char c : labels) {
    if (c == '1')
      cert.labels.push_back(PixelLabel::kOne);
    else if (c == '0')
      cert.labels.push_back(PixelLabel::kZero);
    else if (c == 'a')
      cert.labels.push_back(PixelLabel::kAbstain);
    else
      throw ConfigError("report: invalid label character");
  }
  return cert;
}

}  // namespace detail

inline RunConfig config_from_json(const json& j) {
  RunConfig cfg;
  using detail::get_or;

  const int version = get_or(j, "schema_version", 1);
  if (version != 1) throw ConfigError("config: unsupported schema_version");

  cfg.model_path = get_or<std::string>(j, "model_path", "");

  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    cfg.dataset.seed = get_or<std::uint64_t>(d, "seed", 1);
    cfg.dataset.image_size = get_or(d, "image_size", 32);
    cfg.dataset.num_classes = get_or(d, "num_classes", 4);
    cfg.dataset.channels = get_or(d, "channels", 3);
  } else {
    cfg.dataset.seed = 1;
  }

  if (j.contains("images")) {
    const json& im = j.at("images");
    cfg.images_start = get_or(im, "start", cfg.images_start);
    cfg.images_count = get_or(im, "count", cfg.images_count);
    cfg.image_indices = get_or(im, "indices", std::vector<int>{});
  }

  if (j.contains("method")) {
    const json& m = j.at("method");
    cfg.method.method = method_from_name(get_or<std::string>(m, "name", "grad"));
    cfg.method.score =
        detail::score_from_name(get_or<std::string>(m, "score", "probability"));
    cfg.method.seed = get_or<std::uint64_t>(m, "seed", 0);
    if (m.contains("rise")) {
      const json& r = m.at("rise");
      cfg.method.rise.num_masks = get_or(r, "num_masks", 600);
      cfg.method.rise.grid_size = get_or(r, "grid_size", 6);
      cfg.method.rise.activation_prob = get_or(r, "activation_prob", 0.1);
    }
    if (m.contains("occlusion")) {
      const json& o = m.at("occlusion");
      cfg.method.occlusion.window = get_or(o, "window", 8);
      cfg.method.occlusion.stride = get_or(o, "stride", 4);
      cfg.method.occlusion.fill_value = get_or(o, "fill_value", 0.0);
    }
    if (m.contains("intgrad")) cfg.method.intgrad_steps = get_or(m.at("intgrad"), "steps", 32);
    if (m.contains("stub_rect")) {
      const json& s = m.at("stub_rect");
      cfg.method.stub_rect = {get_or(s, "row", 0), get_or(s, "col", 0), get_or(s, "rows", 32),
                              get_or(s, "cols", 32)};
    }
  }

  if (j.contains("smoothing")) {
    const json& s = j.at("smoothing");
    cfg.smoothing.sigma = get_or(s, "sigma", 0.15);
    cfg.smoothing.n_samples = get_or(s, "n_samples", 100);
    cfg.smoothing.tau = get_or(s, "tau", 0.75);
    cfg.smoothing.alpha = get_or(s, "alpha", 0.001);
    cfg.smoothing.master_seed = get_or<std::uint64_t>(s, "master_seed", 0);
    cfg.smoothing.correction =
        detail::correction_from_name(get_or<std::string>(s, "correction", "bonferroni"));
    if (s.contains("k_percent")) {
      if (s.at("k_percent").is_array())
        cfg.k_list = s.at("k_percent").get<std::vector<double>>();
      else
        cfg.k_list = {s.at("k_percent").get<double>()};
    }
  }
  cfg.smoothing.k_percent = cfg.k_list.front();

  if (j.contains("outputs")) {
    const json& o = j.at("outputs");
    cfg.report_path = get_or<std::string>(o, "report", cfg.report_path);
    cfg.image_dir = get_or<std::string>(o, "image_dir", cfg.image_dir);
  }

  if (j.contains("grid")) {
    const json& g = j.at("grid");
    cfg.grid_count = get_or(g, "count", cfg.grid_count);
    cfg.grid_dim = get_or(g, "grid_dim", cfg.grid_dim);
    cfg.grid_k_percent = get_or(g, "k_percent", cfg.grid_k_percent);
    cfg.confidence_min = get_or(g, "confidence_min", cfg.confidence_min);
    cfg.grid_seed = get_or<std::uint64_t>(g, "seed", 0);
    cfg.grid_scan_start = get_or(g, "scan_start", cfg.grid_scan_start);
  }

  if (j.contains("faithfulness")) {
    const json& f = j.at("faithfulness");
    cfg.k_schedule = get_or(f, "k_schedule", cfg.k_schedule);
    cfg.fill = get_or(f, "fill", 0.0);
  }

  cfg.jobs = get_or(j, "jobs", 1);
  cfg.validate();
  return cfg;
}

inline json config_to_json(const RunConfig& cfg) {
  json j;
  j["schema_version"] = 1;
  j["model_path"] = cfg.model_path;
  j["dataset"] = {{"seed", cfg.dataset.seed},
                  {"image_size", cfg.dataset.image_size},
                  {"num_classes", cfg.dataset.num_classes},
                  {"channels", cfg.dataset.channels}};
  j["images"] = {{"start", cfg.images_start}, {"count", cfg.images_count}};
  if (!cfg.image_indices.empty()) j["images"]["indices"] = cfg.image_indices;
  j["method"] = {
      {"name", method_name(cfg.method.method)},
      {"score", cfg.method.score == ScoreType::kProbability ? "probability" : "logit"},
      {"seed", cfg.method.seed},
      {"rise",
       {{"num_masks", cfg.method.rise.num_masks},
        {"grid_size", cfg.method.rise.grid_size},
        {"activation_prob", cfg.method.rise.activation_prob}}},
      {"occlusion",
       {{"window", cfg.method.occlusion.window},
        {"stride", cfg.method.occlusion.stride},
        {"fill_value", cfg.method.occlusion.fill_value}}},
      {"intgrad", {{"steps", cfg.method.intgrad_steps}}},
      {"stub_rect",
       {{"row", cfg.method.stub_rect.row},
        {"col", cfg.method.stub_rect.col},
        {"rows", cfg.method.stub_rect.rows},
        {"cols", cfg.method.stub_rect.cols}}}};
  j["smoothing"] = {{"sigma", cfg.smoothing.sigma},
                    {"n_samples", cfg.smoothing.n_samples},
                    {"tau", cfg.smoothing.tau},
                    {"alpha", cfg.smoothing.alpha},
                    {"k_percent", cfg.k_list},
                    {"correction", to_string(cfg.smoothing.correction)},
                    {"master_seed", cfg.smoothing.master_seed}};
  j["outputs"] = {{"report", cfg.report_path}, {"image_dir", cfg.image_dir}};
  j["grid"] = {{"count", cfg.grid_count},
               {"grid_dim", cfg.grid_dim},
               {"k_percent", cfg.grid_k_percent},
               {"confidence_min", cfg.confidence_min},
               {"seed", cfg.grid_seed},
               {"scan_start", cfg.grid_scan_start}};
  j["faithfulness"] = {{"k_schedule", cfg.k_schedule}, {"fill", cfg.fill}};
  j["jobs"] = cfg.jobs;
  return j;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config: invalid JSON in " + path + ": " + e.what());
  }
  return config_from_json(j);
}

inline AttributionRequest make_request(const MethodConfig& mc, const Scorer* model) {
  AttributionRequest req;
  req.model = model;
  req.method = mc.method;
  req.score_type = mc.score;
  req.rise = mc.rise;
  req.occlusion = mc.occlusion;
  req.intgrad.steps = mc.intgrad_steps;
  req.stub_rect = mc.stub_rect;
  req.seed = mc.seed;
  return req;
}

namespace detail {

inline ToyClassifier load_model_checked(const RunConfig& cfg) {
  ToyClassifier model;
  try {
    model = ToyClassifier::load(cfg.model_path);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (model.in_height != cfg.dataset.image_size || model.in_width != cfg.dataset.image_size ||
      model.in_channels != cfg.dataset.channels || model.classes != cfg.dataset.num_classes)
    throw ConfigError("config: model dims do not match dataset in " + cfg.model_path);
  return model;
}

inline void write_report(const json& report, const std::string& path) {
  if (const auto dir = std::filesystem::path(path).parent_path(); !dir.empty())
    std::filesystem::create_directories(dir);
  std::ofstream f(path);
  if (!f) throw std::runtime_error("report: cannot open " + path);
  f << report.dump(2) << "\n";
}

struct Stopwatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// certify
// ---------------------------------------------------------------------------

inline json run_certify(const RunConfig& cfg) {
  cfg.validate();
  detail::Stopwatch total_clock;

  ToyClassifier model;
  const bool has_model = !cfg.model_path.empty();
  if (has_model) model = detail::load_model_checked(cfg);
  if (!is_stub(cfg.method.method) && !has_model)
    throw ConfigError("config: model_path required");

  std::filesystem::create_directories(cfg.image_dir);

  json report;
  report["schema_version"] = kReportSchemaVersion;
  report["command"] = "certify";
  report["timestamp"] = detail::utc_timestamp();
  report["config"] = config_to_json(cfg);
  report["per_image"] = json::array();

  const AttributionRequest req = make_request(cfg.method, has_model ? &model : nullptr);
  const double run_radius = radius(cfg.smoothing.sigma, cfg.smoothing.tau);

  double percent_sum = 0.0;
  int percent_count = 0;
  int failures = 0;

  for (const int index : cfg.resolve_indices()) {
    json entry;
    entry["index"] = index;
    detail::Stopwatch clock;
    try {
      const auto [image, label] = generate(cfg.dataset, index);
      entry["label"] = label;
      if (has_model) {
        const std::vector<double> p = model.probs(image);
        const int pred = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
        entry["predicted"] = pred;
        entry["confidence"] = p[pred];
      }

      const std::vector<VoteTensor> votes =
          sample_votes_multi(req, image, cfg.smoothing, cfg.k_list, cfg.jobs);

      std::map<double, CertifiedMap> certs;
      entry["per_k"] = json::array();
      for (std::size_t ki = 0; ki < cfg.k_list.size(); ++ki) {
        SmoothingConfig sc = cfg.smoothing;
        sc.k_percent = cfg.k_list[ki];
        CertifiedMap cert = certify(votes[ki], sc);
        const CertifiedSplit split = percent_certified(cert);
        percent_sum += split.percent_certified;
        ++percent_count;

        json kj;
        kj["k_percent"] = cfg.k_list[ki];
        kj["percent_certified"] = split.percent_certified;
        kj["one_rate"] = split.one_rate;
        kj["zero_rate"] = split.zero_rate;
        kj["labels"] = detail::labels_to_string(cert);
        const std::string map_name =
            "img_" + std::to_string(index) + "_k" + detail::fmt_k(cfg.k_list[ki]) + ".png";
        write_file((std::filesystem::path(cfg.image_dir) / map_name).string(),
                   render_map(cert));
        kj["image"] = map_name;
        entry["per_k"].push_back(kj);
        certs.emplace(cfg.k_list[ki], std::move(cert));
      }

      const std::string overlay_name = "img_" + std::to_string(index) + "_overlay.png";
      write_file((std::filesystem::path(cfg.image_dir) / overlay_name).string(),
                 render_overlay(certs));
      const std::string panel_name = "img_" + std::to_string(index) + "_panel.png";
      write_file((std::filesystem::path(cfg.image_dir) / panel_name).string(),
                 render_panel(image, certs));
      entry["overlay_image"] = overlay_name;
      entry["panel_image"] = panel_name;
      entry["radius"] = run_radius;
      entry["status"] = "ok";
    } catch (const std::exception& e) {
      entry["status"] = "error";
      entry["message"] = e.what();
      ++failures;
    }
    entry["runtime_sec"] = clock.seconds();
    report["per_image"].push_back(entry);
  }

  report["aggregates"] = {
      {"percent_certified_mean", percent_count ? percent_sum / percent_count : 0.0},
      {"certified_gridpg_mean", nullptr},
      {"radius", run_radius},
      {"failures", failures},
      {"runtime_sec", total_clock.seconds()}};

  detail::write_report(report, cfg.report_path);
  return report;
}

// ---------------------------------------------------------------------------
// gridpg
// ---------------------------------------------------------------------------

namespace detail {

inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * (sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]);
}

}  // namespace detail

inline json run_gridpg(const RunConfig& cfg) {
  cfg.validate();
  detail::Stopwatch total_clock;
  if (cfg.model_path.empty())
    throw ConfigError("config: model_path required to build grids");
  const ToyClassifier model = detail::load_model_checked(cfg);

  std::filesystem::create_directories(cfg.image_dir);

  json report;
  report["schema_version"] = kReportSchemaVersion;
  report["command"] = "gridpg";
  report["timestamp"] = detail::utc_timestamp();
  report["config"] = config_to_json(cfg);
  report["per_image"] = json::array();

  const std::vector<GridInstance> grids =
      build_grids(cfg.dataset, model, cfg.grid_count, cfg.confidence_min, cfg.grid_seed,
                  cfg.grid_dim, cfg.grid_scan_start);

  SmoothingConfig sc = cfg.smoothing;
  sc.k_percent = cfg.grid_k_percent;

  const AttributionRequest base_req = make_request(cfg.method, &model);

  std::vector<double> gridpg_scores, certified_scores;
  std::vector<CertifiedMap> cert_maps;
  int failures = 0, degenerate = 0;

  for (std::size_t g = 0; g < grids.size(); ++g) {
    json entry;
    entry["grid_index"] = static_cast<int>(g);
    detail::Stopwatch clock;
    try {
      AttributionRequest req = base_req;
      if (is_stub(req.method)) {
        req.model = nullptr;
        // A fresh fixed map per grid keeps stub grids independent.
        req.seed = cfg.method.seed + g;
      }
      const GridEvaluation ev = evaluate_grid(grids[g], req, sc, cfg.jobs);

      entry["cell_labels"] = grids[g].cell_labels;
      entry["member_indices"] = grids[g].member_indices;
      entry["target_class"] = grids[g].target_class;
      entry["gridpg"] = ev.gridpg_score.score;
      entry["gridpg_degenerate"] = ev.gridpg_score.degenerate;
      entry["certified_gridpg"] = ev.certified_score.score;
      entry["certified_gridpg_degenerate"] = ev.certified_score.degenerate;
      entry["percent_certified"] = percent_certified(ev.cert).percent_certified;
      entry["k_percent"] = cfg.grid_k_percent;
      entry["labels"] = detail::labels_to_string(ev.cert);

      const std::string map_name = "grid_" + std::to_string(g) + "_cert.png";
      write_file((std::filesystem::path(cfg.image_dir) / map_name).string(),
                 render_map(ev.cert));
      entry["image"] = map_name;
      entry["status"] = "ok";

      gridpg_scores.push_back(ev.gridpg_score.score);
      certified_scores.push_back(ev.certified_score.score);
      degenerate += ev.certified_score.degenerate;
      cert_maps.push_back(ev.cert);
    } catch (const std::exception& e) {
      entry["status"] = "error";
      entry["message"] = e.what();
      ++failures;
      cert_maps.emplace_back();
    }
    entry["runtime_sec"] = clock.seconds();
    report["per_image"].push_back(entry);
  }

  // AggAtt exemplars over the certified localization scores.
  report["aggatt"] = json::array();
  if (!certified_scores.empty()) {
    const auto bins = aggatt_bins(certified_scores);
    for (const AggAttBin& bin : bins) {
      json bj;
      bj["lo_percent"] = bin.lo_percent;
      bj["hi_percent"] = bin.hi_percent;
      bj["size"] = bin.members.size();
      if (bin.median_index >= 0) {
        bj["median_grid_index"] = bin.median_index;
        bj["median_score"] = certified_scores[bin.median_index];
        if (!cert_maps[bin.median_index].labels.empty()) {
          const std::string name = "aggatt_" + detail::fmt_k(bin.lo_percent) + "-" +
                                   detail::fmt_k(bin.hi_percent) + "_grid" +
                                   std::to_string(bin.median_index) + ".png";
          write_file((std::filesystem::path(cfg.image_dir) / name).string(),
                     render_map(cert_maps[bin.median_index]));
          bj["image"] = name;
        }
      }
      report["aggatt"].push_back(bj);
    }
  }

  double gp_mean = 0.0, cg_mean = 0.0;
  for (double v : gridpg_scores) gp_mean += v;
  for (double v : certified_scores) cg_mean += v;
  if (!gridpg_scores.empty()) gp_mean /= gridpg_scores.size();
  if (!certified_scores.empty()) cg_mean /= certified_scores.size();

  std::vector<double> sorted = certified_scores;
  std::sort(sorted.begin(), sorted.end());

  report["aggregates"] = {
      {"percent_certified_mean", nullptr},
      {"gridpg_mean", gp_mean},
      {"certified_gridpg_mean", cg_mean},
      {"certified_gridpg_quartiles",
       {detail::quantile_sorted(sorted, 0.25), detail::quantile_sorted(sorted, 0.5),
        detail::quantile_sorted(sorted, 0.75)}},
      {"degenerate_grids", degenerate},
      {"radius", radius(cfg.smoothing.sigma, cfg.smoothing.tau)},
      {"failures", failures},
      {"runtime_sec", total_clock.seconds()}};

  detail::write_report(report, cfg.report_path);
  return report;
}

// ---------------------------------------------------------------------------
// faithfulness
// ---------------------------------------------------------------------------

inline json run_faithfulness(const RunConfig& cfg) {
  cfg.validate();
  detail::Stopwatch total_clock;
  if (cfg.model_path.empty())
    throw ConfigError("config: model_path required for faithfulness");
  const ToyClassifier model = detail::load_model_checked(cfg);

  json report;
  report["schema_version"] = kReportSchemaVersion;
  report["command"] = "faithfulness";
  report["timestamp"] = detail::utc_timestamp();
  report["config"] = config_to_json(cfg);
  report["per_image"] = json::array();

  const AttributionRequest req =
      make_request(cfg.method, is_stub(cfg.method.method) ? nullptr : &model);

  std::vector<double> conf_sums(cfg.k_schedule.size(), 0.0);
  double baseline_sum = 0.0;
  int ok_count = 0, failures = 0;

  for (const int index : cfg.resolve_indices()) {
    json entry;
    entry["index"] = index;
    detail::Stopwatch clock;
    try {
      const auto [image, label] = generate(cfg.dataset, index);
      entry["label"] = label;

      const std::vector<VoteTensor> votes =
          sample_votes_multi(req, image, cfg.smoothing, cfg.k_schedule, cfg.jobs);
      std::map<double, CertifiedMap> certs;
      for (std::size_t ki = 0; ki < cfg.k_schedule.size(); ++ki) {
        SmoothingConfig sc = cfg.smoothing;
        sc.k_percent = cfg.k_schedule[ki];
        certs.emplace(cfg.k_schedule[ki], certify(votes[ki], sc));
      }

      const FaithfulnessCurve curve =
          faithfulness_curve(model, image, label, certs, cfg.k_schedule, cfg.fill);
      entry["baseline_confidence"] = curve.baseline_confidence;
      entry["k_schedule"] = curve.k_schedule;
      entry["confidences"] = curve.confidences;
      entry["status"] = "ok";

      baseline_sum += curve.baseline_confidence;
      for (std::size_t i = 0; i < curve.confidences.size(); ++i)
        conf_sums[i] += curve.confidences[i];
      ++ok_count;
    } catch (const std::exception& e) {
      entry["status"] = "error";
      entry["message"] = e.what();
      ++failures;
    }
    entry["runtime_sec"] = clock.seconds();
    report["per_image"].push_back(entry);
  }

  json mean_curve = json::array();
  for (double s : conf_sums) mean_curve.push_back(ok_count ? s / ok_count : 0.0);
  report["aggregates"] = {
      {"percent_certified_mean", nullptr},
      {"certified_gridpg_mean", nullptr},
      {"baseline_confidence_mean", ok_count ? baseline_sum / ok_count : 0.0},
      {"mean_curve", mean_curve},
      {"k_schedule", cfg.k_schedule},
      {"radius", radius(cfg.smoothing.sigma, cfg.smoothing.tau)},
      {"failures", failures},
      {"runtime_sec", total_clock.seconds()}};

  detail::write_report(report, cfg.report_path);
  return report;
}

// ---------------------------------------------------------------------------
// render (from a previously written report)
// ---------------------------------------------------------------------------

inline void run_render(const std::string& report_path, const std::string& out_dir) {
  std::ifstream f(report_path);
  if (!f) throw ConfigError("render: cannot open report " + report_path);
  json report;
  try {
    f >> report;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("render: invalid report JSON: ") + e.what());
  }
  if (!report.contains("config") || !report.contains("per_image"))
    throw ConfigError("render: report missing config/per_image");

  const RunConfig cfg = config_from_json(report.at("config"));
  std::filesystem::create_directories(out_dir);

  for (const json& entry : report.at("per_image")) {
    if (entry.value("status", "") != "ok") continue;

    if (entry.contains("per_k")) {  // certify-style entry
      const int index = entry.at("index").get<int>();
      const auto [image, label] = generate(cfg.dataset, index);
      std::map<double, CertifiedMap> certs;
      for (const json& kj : entry.at("per_k")) {
        const double k = kj.at("k_percent").get<double>();
        CertifiedMap cert = detail::cert_from_labels(kj.at("labels").get<std::string>(),
                                                     image.height, image.width, k);
        write_file((std::filesystem::path(out_dir) / ("img_" + std::to_string(index) + "_k" +
                                                      detail::fmt_k(k) + ".png"))
                       .string(),
                   render_map(cert));
        certs.emplace(k, std::move(cert));
      }
      write_file((std::filesystem::path(out_dir) /
                  ("img_" + std::to_string(index) + "_overlay.png"))
                     .string(),
                 render_overlay(certs));
      write_file(
          (std::filesystem::path(out_dir) / ("img_" + std::to_string(index) + "_panel.png"))
              .string(),
          render_panel(image, certs));
    } else if (entry.contains("labels")) {  // gridpg-style entry
      const int g = entry.at("grid_index").get<int>();
      const int side = cfg.grid_dim * cfg.dataset.image_size;
      const CertifiedMap cert = detail::cert_from_labels(
          entry.at("labels").get<std::string>(), side, side,
          entry.value("k_percent", cfg.grid_k_percent));
      write_file(
          (std::filesystem::path(out_dir) / ("grid_" + std::to_string(g) + "_cert.png"))
              .string(),
          render_map(cert));
    }
  }
}

}  // namespace pixelcert
