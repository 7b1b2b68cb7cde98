// Synthetic shape dataset and a small dense classifier with hand-written
// forward/backward passes. The classifier is the black-box model the
// attribution methods explain.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pixelcert/rng.hpp"
#include "pixelcert/types.hpp"

namespace pixelcert {

inline std::vector<double> softmax(const std::vector<double>& logits) {
  std::vector<double> p(logits.size());
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

// Scoring interface attribution methods run against. Implementations must be
// immutable and safe for concurrent calls.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual int channels() const = 0;
  virtual int height() const = 0;
  virtual int width() const = 0;
  virtual int num_classes() const = 0;
  virtual std::vector<double> logits(const ImageTensor& x) const = 0;
  // d logit[class_index] / d x, same shape as x.
  virtual ImageTensor grad_logit(const ImageTensor& x, int class_index) const = 0;

  std::vector<double> probs(const ImageTensor& x) const { return softmax(logits(x)); }

  void check_input(const ImageTensor& x) const {
    if (x.channels != channels() || x.height != height() || x.width != width())
      throw std::invalid_argument("Scorer: input shape mismatch");
  }
};

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

// Classes: 0 square, 1 disk, 2 cross, 3 triangle. Generation is a pure
// function of (seed, index); every random draw comes from the stream
// RngStream(seed, index) in a fixed order.
struct ShapeDataset {
  int image_size = 32;
  int num_classes = 4;
  std::uint64_t seed = 0;
  int channels = 3;
};

inline std::pair<ImageTensor, int> generate(const ShapeDataset& ds, int index) {
  if (index < 0) throw std::invalid_argument("generate: index must be >= 0");
  const int label = index % ds.num_classes;
  const int s = ds.image_size;
  RngStream rng(ds.seed, static_cast<std::uint64_t>(index));

  std::vector<double> shape_color(ds.channels), bg_base(ds.channels);
  for (double& c : shape_color) c = 0.65 + 0.30 * rng.uniform();
  for (double& c : bg_base) c = 0.05 + 0.08 * rng.uniform();

  // Target area fraction; narrower per shape so the rasterized mask stays
  // within 20-60% of the image even at the jitter extremes.
  const double a_draw = rng.uniform();
  const double cx = 0.5 * s + (rng.uniform() - 0.5) * 0.16 * s;
  const double cy = 0.5 * s + (rng.uniform() - 0.5) * 0.16 * s;

  ImageTensor img = ImageTensor::zeros(ds.channels, s, s);

  auto inside = [&](double px, double py) -> bool {
    const double dx = px - cx, dy = py - cy;
    switch (label) {
      case 0: {  // square
        const double a = 0.25 + 0.30 * a_draw;
        const double half = 0.5 * std::sqrt(a) * s;
        return std::max(std::fabs(dx), std::fabs(dy)) <= half;
      }
      case 1: {  // disk
        const double a = 0.25 + 0.25 * a_draw;
        const double r2 = a * s * s / 3.14159265358979323846;
        return dx * dx + dy * dy <= r2;
      }
      case 2: {  // cross, arm length 0.9s, width from area 2wL - w^2
        const double a = 0.25 + 0.20 * a_draw;
        const double arm = 0.9 * s;
        const double w = arm - std::sqrt(arm * arm - a * s * s);
        return (std::fabs(dx) <= 0.5 * w && std::fabs(dy) <= 0.5 * arm) ||
               (std::fabs(dy) <= 0.5 * w && std::fabs(dx) <= 0.5 * arm);
      }
      default: {  // isosceles triangle, apex up, height 0.8s
        const double a = 0.25 + 0.15 * a_draw;
        const double hh = 0.8 * s;
        const double base = 2.0 * a * s * s / hh;
        const double ytop = cy - 0.5 * hh;
        if (dy < -0.5 * hh || dy > 0.5 * hh) return false;
        const double frac = (py - ytop) / hh;  // 0 at apex, 1 at base
        return std::fabs(dx) <= 0.5 * base * frac;
      }
    }
  };

  for (int c = 0; c < ds.channels; ++c)
    for (int y = 0; y < s; ++y)
      for (int x = 0; x < s; ++x) {
        const bool in = inside(x + 0.5, y + 0.5);
        const double base = in ? shape_color[c] : bg_base[c];
        const double noisy = base + 0.05 * (rng.uniform() - 0.5);
        img.at(c, y, x) = std::clamp(noisy, 0.0, 1.0);
      }

  return {std::move(img), label};
}

// ---------------------------------------------------------------------------
// Classifier
// ---------------------------------------------------------------------------

// Dense net: input(c*h*w) -> hidden(ReLU) -> logits(num_classes).
// w1 is hidden x input row-major, w2 is classes x hidden row-major.
struct ToyClassifier : public Scorer {
  std::uint32_t version = 1;
  int in_channels = 3;
  int in_height = 32;
  int in_width = 32;
  int hidden = 128;
  int classes = 4;
  std::vector<double> w1, b1, w2, b2;

  int input_size() const { return in_channels * in_height * in_width; }

  int channels() const override { return in_channels; }
  int height() const override { return in_height; }
  int width() const override { return in_width; }
  int num_classes() const override { return classes; }

  void init_zero() {
    w1.assign(static_cast<std::size_t>(hidden) * input_size(), 0.0);
    b1.assign(hidden, 0.0);
    w2.assign(static_cast<std::size_t>(classes) * hidden, 0.0);
    b2.assign(classes, 0.0);
  }

  std::vector<double> hidden_pre(const ImageTensor& x) const {
    const int in = input_size();
    std::vector<double> z1(hidden);
    for (int j = 0; j < hidden; ++j) {
      const double* row = &w1[static_cast<std::size_t>(j) * in];
      double acc = b1[j];
      for (int i = 0; i < in; ++i) acc += row[i] * x.data[i];
      z1[j] = acc;
    }
    return z1;
  }

  std::vector<double> logits(const ImageTensor& x) const override {
    check_input(x);
    const std::vector<double> z1 = hidden_pre(x);
    std::vector<double> z2(classes);
    for (int k = 0; k < classes; ++k) {
      const double* row = &w2[static_cast<std::size_t>(k) * hidden];
      double acc = b2[k];
      for (int j = 0; j < hidden; ++j) acc += row[j] * std::max(z1[j], 0.0);
      z2[k] = acc;
    }
    return z2;
  }

  ImageTensor grad_logit(const ImageTensor& x, int class_index) const override {
    check_input(x);
    if (class_index < 0 || class_index >= classes)
      throw std::invalid_argument("grad_logit: class_index out of range");
    const int in = input_size();
    const std::vector<double> z1 = hidden_pre(x);

    ImageTensor g = ImageTensor::zeros(in_channels, in_height, in_width);
    const double* u = &w2[static_cast<std::size_t>(class_index) * hidden];
    for (int j = 0; j < hidden; ++j) {
      if (z1[j] <= 0.0 || u[j] == 0.0) continue;
      const double scale = u[j];
      const double* row = &w1[static_cast<std::size_t>(j) * in];
      for (int i = 0; i < in; ++i) g.data[i] += scale * row[i];
    }
    return g;
  }

  // ---- persistence ----

  void save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("ToyClassifier::save: cannot open " + path);
    f.write("PXTM", 4);
    auto put_u32 = [&](std::uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
    put_u32(version);
    put_u32(static_cast<std::uint32_t>(in_channels));
    put_u32(static_cast<std::uint32_t>(in_height));
    put_u32(static_cast<std::uint32_t>(in_width));
    put_u32(static_cast<std::uint32_t>(hidden));
    put_u32(static_cast<std::uint32_t>(classes));
    auto put_vec = [&](const std::vector<double>& v) {
      f.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
    };
    put_vec(w1);
    put_vec(b1);
    put_vec(w2);
    put_vec(b2);
    if (!f) throw std::runtime_error("ToyClassifier::save: write failed for " + path);
  }

  static ToyClassifier load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("ToyClassifier::load: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "PXTM", 4) != 0)
      throw std::runtime_error("ToyClassifier::load: bad magic in " + path);
    auto get_u32 = [&]() {
      std::uint32_t v = 0;
      f.read(reinterpret_cast<char*>(&v), 4);
      return v;
    };
    ToyClassifier m;
    m.version = get_u32();
    if (m.version != 1) throw std::runtime_error("ToyClassifier::load: unsupported version");
    m.in_channels = static_cast<int>(get_u32());
    m.in_height = static_cast<int>(get_u32());
    m.in_width = static_cast<int>(get_u32());
    m.hidden = static_cast<int>(get_u32());
    m.classes = static_cast<int>(get_u32());
    if (m.in_channels < 1 || m.in_height < 1 || m.in_width < 1 || m.hidden < 1 ||
        m.classes < 2 || m.input_size() > (1 << 24))
      throw std::runtime_error("ToyClassifier::load: implausible dims");
    auto get_vec = [&](std::size_t n) {
      std::vector<double> v(n);
      f.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
      return v;
    };
    m.w1 = get_vec(static_cast<std::size_t>(m.hidden) * m.input_size());
    m.b1 = get_vec(m.hidden);
    m.w2 = get_vec(static_cast<std::size_t>(m.classes) * m.hidden);
    m.b2 = get_vec(m.classes);
    if (!f) throw std::runtime_error("ToyClassifier::load: truncated file " + path);
    return m;
  }
};

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainOptions {
  int epochs = 20;
  double lr = 0.05;
  std::uint64_t seed = 0;
  int train_count = 1000;
  int batch_size = 16;
  int hidden = 128;
};

inline double cross_entropy(const std::vector<double>& probs, int label) {
  return -std::log(std::max(probs[label], 1e-300));
}

namespace detail {

struct TrainBuffers {
  std::vector<double> z1, a1, dz1, dz2;
};

// Accumulates one sample's gradient; returns its loss.
inline double backprop_sample(const ToyClassifier& m, const double* x, int label,
                              std::vector<double>& gw1, std::vector<double>& gb1,
                              std::vector<double>& gw2, std::vector<double>& gb2,
                              TrainBuffers& buf) {
  const int in = m.input_size();
  buf.z1.resize(m.hidden);
  buf.a1.resize(m.hidden);
  for (int j = 0; j < m.hidden; ++j) {
    const double* row = &m.w1[static_cast<std::size_t>(j) * in];
    double acc = m.b1[j];
    for (int i = 0; i < in; ++i) acc += row[i] * x[i];
    buf.z1[j] = acc;
    buf.a1[j] = std::max(acc, 0.0);
  }
  std::vector<double> z2(m.classes);
  for (int k = 0; k < m.classes; ++k) {
    const double* row = &m.w2[static_cast<std::size_t>(k) * m.hidden];
    double acc = m.b2[k];
    for (int j = 0; j < m.hidden; ++j) acc += row[j] * buf.a1[j];
    z2[k] = acc;
  }
  const std::vector<double> p = softmax(z2);

  buf.dz2.assign(m.classes, 0.0);
  for (int k = 0; k < m.classes; ++k) buf.dz2[k] = p[k] - (k == label ? 1.0 : 0.0);

  for (int k = 0; k < m.classes; ++k) {
    const double d = buf.dz2[k];
    gb2[k] += d;
    double* grow = &gw2[static_cast<std::size_t>(k) * m.hidden];
    for (int j = 0; j < m.hidden; ++j) grow[j] += d * buf.a1[j];
  }

  buf.dz1.assign(m.hidden, 0.0);
  for (int k = 0; k < m.classes; ++k) {
    const double d = buf.dz2[k];
    const double* row = &m.w2[static_cast<std::size_t>(k) * m.hidden];
    for (int j = 0; j < m.hidden; ++j) buf.dz1[j] += d * row[j];
  }
  for (int j = 0; j < m.hidden; ++j)
    if (buf.z1[j] <= 0.0) buf.dz1[j] = 0.0;

  for (int j = 0; j < m.hidden; ++j) {
    const double d = buf.dz1[j];
    if (d == 0.0) continue;
    gb1[j] += d;
    double* grow = &gw1[static_cast<std::size_t>(j) * in];
    for (int i = 0; i < in; ++i) grow[i] += d * x[i];
  }

  return cross_entropy(p, label);
}

}  // namespace detail

// Mean cross-entropy over dataset indices [start, start+count).
inline double mean_loss(const ToyClassifier& m, const ShapeDataset& ds, int start, int count) {
  double total = 0.0;
  for (int i = 0; i < count; ++i) {
    const auto [img, label] = generate(ds, start + i);
    total += cross_entropy(m.probs(img), label);
  }
  return total / count;
}

inline double accuracy(const ToyClassifier& m, const ShapeDataset& ds, int start, int count) {
  int correct = 0;
  for (int i = 0; i < count; ++i) {
    const auto [img, label] = generate(ds, start + i);
    const std::vector<double> z = m.logits(img);
    const int pred = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
    correct += (pred == label);
  }
  return static_cast<double>(correct) / count;
}

// Minibatch SGD on softmax cross-entropy over dataset indices
// [0, train_count). Deterministic: init and epoch shuffles come from fixed
// streams of opt.seed, and accumulation order is the batch order.
inline ToyClassifier train(const ShapeDataset& ds, const TrainOptions& opt) {
  if (opt.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  ToyClassifier m;
  m.in_channels = ds.channels;
  m.in_height = ds.image_size;
  m.in_width = ds.image_size;
  m.hidden = opt.hidden;
  m.classes = ds.num_classes;
  m.init_zero();

  const int in = m.input_size();
  RngStream init_rng(opt.seed, 0);
  const double s1 = std::sqrt(6.0 / (in + m.hidden));
  for (double& w : m.w1) w = (2.0 * init_rng.uniform() - 1.0) * s1;
  const double s2 = std::sqrt(6.0 / (m.hidden + m.classes));
  for (double& w : m.w2) w = (2.0 * init_rng.uniform() - 1.0) * s2;

  std::vector<std::vector<double>> xs(opt.train_count);
  std::vector<int> ys(opt.train_count);
  for (int i = 0; i < opt.train_count; ++i) {
    auto [img, label] = generate(ds, i);
    xs[i] = std::move(img.data);
    ys[i] = label;
  }

  std::vector<double> gw1(m.w1.size()), gb1(m.b1.size()), gw2(m.w2.size()), gb2(m.b2.size());
  detail::TrainBuffers buf;
  std::vector<int> order(opt.train_count);
  for (int i = 0; i < opt.train_count; ++i) order[i] = i;

  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    RngStream shuffle_rng(opt.seed, 1000 + static_cast<std::uint64_t>(epoch));
    shuffle_rng.shuffle(order);
    for (int begin = 0; begin < opt.train_count; begin += opt.batch_size) {
      const int end = std::min(begin + opt.batch_size, opt.train_count);
      std::fill(gw1.begin(), gw1.end(), 0.0);
      std::fill(gb1.begin(), gb1.end(), 0.0);
      std::fill(gw2.begin(), gw2.end(), 0.0);
      std::fill(gb2.begin(), gb2.end(), 0.0);
      for (int b = begin; b < end; ++b)
        detail::backprop_sample(m, xs[order[b]].data(), ys[order[b]], gw1, gb1, gw2, gb2, buf);
      const double step = opt.lr / (end - begin);
      for (std::size_t i = 0; i < m.w1.size(); ++i) m.w1[i] -= step * gw1[i];
      for (std::size_t i = 0; i < m.b1.size(); ++i) m.b1[i] -= step * gb1[i];
      for (std::size_t i = 0; i < m.w2.size(); ++i) m.w2[i] -= step * gw2[i];
      for (std::size_t i = 0; i < m.b2.size(); ++i) m.b2[i] -= step * gb2[i];
    }
  }
  return m;
}

}  // namespace pixelcert
