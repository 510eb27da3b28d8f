#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mobivital/candidates.hpp"
#include "mobivital/ingest.hpp"
#include "mobivital/lstm.hpp"
#include "mobivital/parallel.hpp"

namespace mobivital {

struct ArHyperParams {
  std::size_t history_len = 200;  // 4 s at 50 Hz
  std::size_t future_len = 25;    // 0.5 s at 50 Hz
  std::size_t hidden_size = 352;
  std::size_t num_layers = 2;
  std::size_t batch_size = 64;
  std::size_t epochs = 20;
  double learning_rate = 1e-4;
  std::size_t window_step = 25;

  std::size_t window_len() const { return history_len + future_len; }
  // Throws InvariantViolation unless all fields are positive and history_len > future_len.
  void validate() const;
  bool operator==(const ArHyperParams&) const = default;
};

// Per-window normalization applied to histories before they reach the network.
enum class InputNorm : std::uint32_t {
  // (x - mean(history)) / max(std(history), 1e-6), applied to history and future alike.
  HistoryZScore = 1,
};

inline constexpr double kNormStdFloor = 1e-6;

// Number of (history, future) windows a sequence of length n yields.
std::size_t window_count(std::size_t n, const ArHyperParams& hp);

class ArModel {
 public:
  // Zero weights and biases.
  explicit ArModel(const ArHyperParams& hp);

  // Uniform(+-1/sqrt(hidden)) weights, forget-gate bias +1, zero head bias.
  static ArModel initialize(const ArHyperParams& hp, std::uint64_t seed);

  const ArHyperParams& hyper() const { return hp_; }
  InputNorm input_norm() const { return norm_; }
  LstmNetwork<float>& network() { return net_; }
  const LstmNetwork<float>& network() const { return net_; }

  // Raw network on an already-normalized history.
  std::vector<double> forward(std::span<const double> history) const;

  // Batched raw network; histories is (history_len x B), result (future_len x B).
  Eigen::MatrixXf forward_batch(const Eigen::MatrixXf& histories) const;

  // Normalizes the history, runs the network and maps the prediction back
  // to the history's scale.
  std::vector<double> predict(std::span<const double> history) const;

 private:
  ArHyperParams hp_;
  InputNorm norm_ = InputNorm::HistoryZScore;
  LstmNetwork<float> net_;
};

enum class Provenance : std::uint8_t { GroundTruth, HighQualityUwb };

struct TrainSet {
  Eigen::MatrixXf histories;  // (history_len x N), normalized
  Eigen::MatrixXf futures;    // (future_len x N), normalized with the history statistics
  std::vector<Provenance> provenance;
  std::size_t num_sequences = 0;

  std::size_t size() const { return static_cast<std::size_t>(histories.cols()); }
};

struct TrainingSession {
  const CandidateBank* bank = nullptr;
  const GroundTruthWaveform* truth = nullptr;  // may be null
};

// Writes the normalized history and future for the window starting at
// `start` into the given columns.
void normalize_window(std::span<const double> seq, std::size_t start, const ArHyperParams& hp,
                      Eigen::Ref<Eigen::VectorXf> history, Eigen::Ref<Eigen::VectorXf> future);

// Truth waveforms plus every candidate whose correlation with its truth is >= r0,
// sliced into windows with stride window_step.
TrainSet build_train_set(std::span<const TrainingSession> sessions, double r0, const ArHyperParams& hp);

// Appends the windows of one sequence.
void append_windows(TrainSet& set, std::span<const double> seq, Provenance provenance, const ArHyperParams& hp);

struct TrainResult {
  ArModel model;
  std::vector<double> loss_curve;  // mean training MSE per epoch
};

using EpochCallback = std::function<void(std::size_t epoch, double mse)>;

// Adam on the windowed MSE with full backpropagation through time. Batches
// are split into fixed-size chunks whose gradients are summed in index
// order, so Serial and Parallel give identical weights.
TrainResult train(const TrainSet& set, const ArHyperParams& hp, std::uint64_t seed, Exec exec = Exec::Parallel,
                  const EpochCallback& on_epoch = {});

// Mean squared error of the model and of the hold-last-value predictor on a window set.
double evaluate_mse(const ArModel& model, const TrainSet& set);
double hold_last_mse(const TrainSet& set);

struct GradientCheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t num_params = 0;
};

// Compares BPTT gradients of the MSE on (history, future) windows against
// central differences, in double precision, over every parameter.
GradientCheckReport gradient_check(const LstmNetwork<double>& net, const Eigen::MatrixXd& histories,
                                   const Eigen::MatrixXd& futures, double epsilon = 1e-4);

// MVM1 checkpoint.
void save_model(const ArModel& model, const std::filesystem::path& path);
ArModel load_model(const std::filesystem::path& path);

void export_loss_curve_csv(std::span<const double> loss_curve, const std::filesystem::path& path);

}  // namespace mobivital
