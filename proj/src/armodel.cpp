#include "mobivital/armodel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include "mobivital/dsp.hpp"
#include "mobivital/errors.hpp"

namespace mobivital {
namespace {

constexpr char kModelMagic[4] = {'M', 'V', 'M', '1'};
constexpr std::uint32_t kModelVersion = 1;
constexpr std::size_t kGradChunk = 16;

struct ModelHeader {
  std::uint32_t history_len;
  std::uint32_t future_len;
  std::uint32_t hidden_size;
  std::uint32_t num_layers;
  std::uint32_t batch_size;
  std::uint32_t epochs;
  double learning_rate;
  std::uint32_t window_step;
  std::uint32_t input_norm;
  std::uint64_t param_count;
};

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error(ErrorCode::TruncatedFile, "checkpoint header ends early");
  return v;
}

std::pair<double, double> history_stats(std::span<const double> h) {
  const double m = dsp::mean(h);
  const double sd = std::sqrt(dsp::variance(h));
  return {m, std::max(sd, kNormStdFloor)};
}

}  // namespace

void ArHyperParams::validate() const {
  if (history_len == 0 || future_len == 0 || hidden_size == 0 || num_layers == 0 || batch_size == 0 ||
      window_step == 0 || !(learning_rate > 0.0)) {
    throw Error(ErrorCode::InvariantViolation, "hyperparameters must be positive");
  }
  if (history_len <= future_len) throw Error(ErrorCode::InvariantViolation, "history_len must exceed future_len");
}

std::size_t window_count(std::size_t n, const ArHyperParams& hp) {
  if (n < hp.window_len()) return 0;
  return (n - hp.window_len()) / hp.window_step + 1;
}

ArModel::ArModel(const ArHyperParams& hp) : hp_(hp), net_(hp.hidden_size, hp.num_layers, hp.future_len) {
  hp_.validate();
}

ArModel ArModel::initialize(const ArHyperParams& hp, std::uint64_t seed) {
  ArModel model(hp);
  std::mt19937_64 rng(seed);
  const float bound = 1.0f / std::sqrt(static_cast<float>(hp.hidden_size));
  std::uniform_real_distribution<float> dist(-bound, bound);
  auto& p = model.net_.params();
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = dist(rng);
  const auto h = static_cast<Eigen::Index>(hp.hidden_size);
  for (std::size_t l = 0; l < hp.num_layers; ++l) {
    auto b = model.net_.bias(l);
    b.setZero();
    b.segment(h, h).setOnes();
  }
  model.net_.head_b().setZero();
  return model;
}

std::vector<double> ArModel::forward(std::span<const double> history) const {
  if (history.size() != hp_.history_len) throw Error(ErrorCode::ShapeMismatch, "history length mismatch");
  Eigen::MatrixXf x(history.size(), 1);
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (!std::isfinite(history[i])) throw Error(ErrorCode::InvariantViolation, "non-finite history sample");
    x(static_cast<Eigen::Index>(i), 0) = static_cast<float>(history[i]);
  }
  const Eigen::MatrixXf y = net_.forward(x);
  return {y.data(), y.data() + y.size()};
}

Eigen::MatrixXf ArModel::forward_batch(const Eigen::MatrixXf& histories) const {
  if (static_cast<std::size_t>(histories.rows()) != hp_.history_len) {
    throw Error(ErrorCode::ShapeMismatch, "history length mismatch");
  }
  return net_.forward(histories);
}

std::vector<double> ArModel::predict(std::span<const double> history) const {
  if (history.size() != hp_.history_len) throw Error(ErrorCode::ShapeMismatch, "history length mismatch");
  const auto [m, sd] = history_stats(history);
  std::vector<double> normalized(history.size());
  for (std::size_t i = 0; i < history.size(); ++i) normalized[i] = (history[i] - m) / sd;
  auto y = forward(normalized);
  for (double& v : y) v = v * sd + m;
  return y;
}

void normalize_window(std::span<const double> seq, std::size_t start, const ArHyperParams& hp,
                      Eigen::Ref<Eigen::VectorXf> history, Eigen::Ref<Eigen::VectorXf> future) {
  const auto hist = seq.subspan(start, hp.history_len);
  const auto [m, sd] = history_stats(hist);
  for (std::size_t i = 0; i < hp.history_len; ++i) {
    history[static_cast<Eigen::Index>(i)] = static_cast<float>((hist[i] - m) / sd);
  }
  for (std::size_t i = 0; i < hp.future_len; ++i) {
    future[static_cast<Eigen::Index>(i)] = static_cast<float>((seq[start + hp.history_len + i] - m) / sd);
  }
}

void append_windows(TrainSet& set, std::span<const double> seq, Provenance provenance, const ArHyperParams& hp) {
  const std::size_t count = window_count(seq.size(), hp);
  if (count == 0) return;
  const auto h = static_cast<Eigen::Index>(hp.history_len);
  const auto f = static_cast<Eigen::Index>(hp.future_len);
  const Eigen::Index base = set.histories.cols();
  if (base == 0) {
    set.histories.resize(h, 0);
    set.futures.resize(f, 0);
  }
  set.histories.conservativeResize(h, base + static_cast<Eigen::Index>(count));
  set.futures.conservativeResize(f, base + static_cast<Eigen::Index>(count));
  for (std::size_t w = 0; w < count; ++w) {
    const auto col = base + static_cast<Eigen::Index>(w);
    normalize_window(seq, w * hp.window_step, hp, set.histories.col(col), set.futures.col(col));
    set.provenance.push_back(provenance);
  }
  ++set.num_sequences;
}

TrainSet build_train_set(std::span<const TrainingSession> sessions, double r0, const ArHyperParams& hp) {
  hp.validate();
  TrainSet set;
  set.histories.resize(static_cast<Eigen::Index>(hp.history_len), 0);
  set.futures.resize(static_cast<Eigen::Index>(hp.future_len), 0);
  for (const auto& s : sessions) {
    if (s.truth == nullptr || s.bank == nullptr) continue;
    GroundTruthWaveform truth = *s.truth;
    if (truth.sample_rate_hz != s.bank->sample_rate_hz) truth = resample_to(truth, s.bank->sample_rate_hz);
    const std::size_t n = std::min<std::size_t>(truth.samples.size(), s.bank->num_samples);
    if (n < 2) continue;
    const std::span<const double> truth_span(truth.samples.data(), n);
    append_windows(set, truth_span, Provenance::GroundTruth, hp);
    for (const auto& c : s.bank->candidates) {
      const auto r = dsp::pearson_r(std::span<const double>(c.samples.data(), n), truth_span);
      if (r && *r >= r0) append_windows(set, c.samples, Provenance::HighQualityUwb, hp);
    }
  }
  if (set.size() == 0) throw Error(ErrorCode::NoQualifyingSequences, "no truth or candidate reaches r0");
  return set;
}

TrainResult train(const TrainSet& set, const ArHyperParams& hp, std::uint64_t seed, Exec exec,
                  const EpochCallback& on_epoch) {
  hp.validate();
  if (set.size() == 0) throw Error(ErrorCode::EmptyTrainSet, "training set is empty");
  if (static_cast<std::size_t>(set.histories.rows()) != hp.history_len ||
      static_cast<std::size_t>(set.futures.rows()) != hp.future_len) {
    throw Error(ErrorCode::ShapeMismatch, "training windows do not match hyperparameters");
  }

  TrainResult result{ArModel::initialize(hp, seed), {}};
  auto& net = result.model.network();
  Eigen::VectorXf& params = net.params();
  const auto np = params.size();
  Eigen::VectorXf m1 = Eigen::VectorXf::Zero(np);
  Eigen::VectorXf m2 = Eigen::VectorXf::Zero(np);
  constexpr float kBeta1 = 0.9f, kBeta2 = 0.999f, kEps = 1e-8f;
  const auto lr = static_cast<float>(hp.learning_rate);
  std::size_t step = 0;

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(set.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_sse = 0.0;
    for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
      const std::size_t batch = std::min(hp.batch_size, order.size() - start);
      const std::size_t chunks = (batch + kGradChunk - 1) / kGradChunk;
      std::vector<Eigen::VectorXf> grads(chunks);
      std::vector<double> sse(chunks, 0.0);
      const float scale = 1.0f / static_cast<float>(batch * hp.future_len);
      for_each_index(chunks, exec, [&](std::size_t c) {
        const std::size_t lo = c * kGradChunk;
        const std::size_t n = std::min(kGradChunk, batch - lo);
        Eigen::MatrixXf x(set.histories.rows(), static_cast<Eigen::Index>(n));
        Eigen::MatrixXf y(set.futures.rows(), static_cast<Eigen::Index>(n));
        for (std::size_t j = 0; j < n; ++j) {
          const auto src = static_cast<Eigen::Index>(order[start + lo + j]);
          x.col(static_cast<Eigen::Index>(j)) = set.histories.col(src);
          y.col(static_cast<Eigen::Index>(j)) = set.futures.col(src);
        }
        grads[c] = Eigen::VectorXf::Zero(np);
        sse[c] = net.accumulate_gradient(x, y, scale, grads[c]);
      });
      Eigen::VectorXf grad = grads[0];
      double batch_sse = sse[0];
      for (std::size_t c = 1; c < chunks; ++c) {
        grad += grads[c];
        batch_sse += sse[c];
      }
      if (!std::isfinite(batch_sse) || !grad.allFinite()) {
        throw Error(ErrorCode::DivergedLoss, "non-finite loss at epoch " + std::to_string(epoch));
      }
      epoch_sse += batch_sse;

      ++step;
      m1 = kBeta1 * m1 + (1.0f - kBeta1) * grad;
      m2 = kBeta2 * m2 + (1.0f - kBeta2) * grad.cwiseProduct(grad);
      const float c1 = 1.0f - std::pow(kBeta1, static_cast<float>(step));
      const float c2 = 1.0f - std::pow(kBeta2, static_cast<float>(step));
      params.array() -= lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + kEps);
    }
    const double mse = epoch_sse / static_cast<double>(order.size() * hp.future_len);
    result.loss_curve.push_back(mse);
    if (on_epoch) on_epoch(epoch, mse);
  }
  return result;
}

double evaluate_mse(const ArModel& model, const TrainSet& set) {
  if (set.size() == 0) throw Error(ErrorCode::EmptyTrainSet, "evaluation set is empty");
  constexpr Eigen::Index kChunk = 1024;
  double sse = 0.0;
  for (Eigen::Index lo = 0; lo < set.histories.cols(); lo += kChunk) {
    const Eigen::Index n = std::min(kChunk, set.histories.cols() - lo);
    const Eigen::MatrixXf pred = model.forward_batch(set.histories.middleCols(lo, n));
    sse += (pred - set.futures.middleCols(lo, n)).cast<double>().squaredNorm();
  }
  return sse / static_cast<double>(set.futures.size());
}

double hold_last_mse(const TrainSet& set) {
  if (set.size() == 0) throw Error(ErrorCode::EmptyTrainSet, "evaluation set is empty");
  const Eigen::RowVectorXf last = set.histories.bottomRows(1);
  double sse = 0.0;
  for (Eigen::Index c = 0; c < set.futures.cols(); ++c) {
    sse += (set.futures.col(c).array() - last[c]).cast<double>().square().sum();
  }
  return sse / static_cast<double>(set.futures.size());
}

GradientCheckReport gradient_check(const LstmNetwork<double>& net, const Eigen::MatrixXd& histories,
                                   const Eigen::MatrixXd& futures, double epsilon) {
  const double scale = 1.0 / static_cast<double>(futures.size());
  Eigen::VectorXd analytic = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.num_params()));
  net.accumulate_gradient(histories, futures, scale, analytic);

  auto loss = [&](const LstmNetwork<double>& n) { return (n.forward(histories) - futures).squaredNorm() * scale; };

  LstmNetwork<double> probe = net;
  GradientCheckReport report;
  report.num_params = net.num_params();
  // Relative error with a small absolute floor so parameters whose gradient
  // is numerically zero do not divide by zero.
  constexpr double kFloor = 1e-6;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double saved = probe.params()[i];
    probe.params()[i] = saved + epsilon;
    const double up = loss(probe);
    probe.params()[i] = saved - epsilon;
    const double down = loss(probe);
    probe.params()[i] = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double abs_err = std::abs(numeric - analytic[i]);
    const double rel = abs_err / std::max({std::abs(numeric), std::abs(analytic[i]), kFloor});
    report.max_abs_error = std::max(report.max_abs_error, abs_err);
    report.max_rel_error = std::max(report.max_rel_error, rel);
  }
  return report;
}

void save_model(const ArModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot create " + path.string());
  const auto& hp = model.hyper();
  out.write(kModelMagic, 4);
  put(out, kModelVersion);
  put(out, static_cast<std::uint32_t>(hp.history_len));
  put(out, static_cast<std::uint32_t>(hp.future_len));
  put(out, static_cast<std::uint32_t>(hp.hidden_size));
  put(out, static_cast<std::uint32_t>(hp.num_layers));
  put(out, static_cast<std::uint32_t>(hp.batch_size));
  put(out, static_cast<std::uint32_t>(hp.epochs));
  put(out, hp.learning_rate);
  put(out, static_cast<std::uint32_t>(hp.window_step));
  put(out, static_cast<std::uint32_t>(model.input_norm()));
  const auto& p = model.network().params();
  put(out, static_cast<std::uint64_t>(p.size()));
  out.write(reinterpret_cast<const char*>(p.data()), static_cast<std::streamsize>(p.size() * sizeof(float)));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

ArModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kModelMagic, 4) != 0) throw Error(ErrorCode::BadMagic, "expected MVM1");
  if (get<std::uint32_t>(in) != kModelVersion) throw Error(ErrorCode::VersionMismatch, "unsupported version");
  ModelHeader h{};
  h.history_len = get<std::uint32_t>(in);
  h.future_len = get<std::uint32_t>(in);
  h.hidden_size = get<std::uint32_t>(in);
  h.num_layers = get<std::uint32_t>(in);
  h.batch_size = get<std::uint32_t>(in);
  h.epochs = get<std::uint32_t>(in);
  h.learning_rate = get<double>(in);
  h.window_step = get<std::uint32_t>(in);
  h.input_norm = get<std::uint32_t>(in);
  h.param_count = get<std::uint64_t>(in);

  if (h.input_norm != static_cast<std::uint32_t>(InputNorm::HistoryZScore)) {
    throw Error(ErrorCode::VersionMismatch, "unknown input normalization");
  }
  ArHyperParams hp{h.history_len, h.future_len, h.hidden_size, h.num_layers, h.batch_size,
                   h.epochs,      h.learning_rate, h.window_step};
  try {
    hp.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::VersionMismatch, e.what());
  }
  if (h.param_count != LstmNetwork<float>::param_count(hp.hidden_size, hp.num_layers, hp.future_len)) {
    throw Error(ErrorCode::VersionMismatch, "weight count does not match the hyperparameter block");
  }
  ArModel model(hp);
  auto& p = model.network().params();
  in.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(p.size() * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(p.size() * sizeof(float))) {
    throw Error(ErrorCode::TruncatedFile, "weight payload ends early");
  }
  if (!p.allFinite()) throw Error(ErrorCode::InvariantViolation, "non-finite weights");
  return model;
}

void export_loss_curve_csv(std::span<const double> loss_curve, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot create " + path.string());
  out.precision(9);
  out << "epoch,mse\n";
  for (std::size_t e = 0; e < loss_curve.size(); ++e) out << e << ',' << loss_curve[e] << '\n';
}

}  // namespace mobivital
