#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "mobivital/errors.hpp"

namespace mobivital {

// Stacked LSTM over a scalar input sequence followed by a linear head on the
// final top-layer hidden state. Gate order within the 4H pre-activation rows
// is input, forget, cell, output.
//
// All parameters live in one flat vector so the optimizer, the checkpoint
// writer and the finite-difference checker can treat them uniformly. Layout,
// every tensor column-major:
//   for each layer l: w_in (4H x I_l), w_rec (4H x H), bias (4H)
//   head_w (F x H), head_b (F)
// with I_0 = 1 and I_l = H for l > 0.
template <typename Scalar>
class LstmNetwork {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;
  using VectorMap = Eigen::Map<Vector>;
  using ConstVectorMap = Eigen::Map<const Vector>;

  LstmNetwork() = default;

  LstmNetwork(std::size_t hidden, std::size_t layers, std::size_t outputs)
      : hidden_(static_cast<Eigen::Index>(hidden)),
        layers_(layers),
        outputs_(static_cast<Eigen::Index>(outputs)) {
    if (hidden == 0 || layers == 0 || outputs == 0) {
      throw Error(ErrorCode::ShapeMismatch, "LSTM dimensions must be positive");
    }
    Eigen::Index offset = 0;
    for (std::size_t l = 0; l < layers; ++l) {
      const Eigen::Index in = l == 0 ? 1 : hidden_;
      offsets_.push_back({offset, offset + 4 * hidden_ * in, offset + 4 * hidden_ * in + 4 * hidden_ * hidden_});
      offset = offsets_.back().bias + 4 * hidden_;
    }
    head_w_offset_ = offset;
    head_b_offset_ = offset + outputs_ * hidden_;
    params_ = Vector::Zero(head_b_offset_ + outputs_);
  }

  static std::size_t param_count(std::size_t hidden, std::size_t layers, std::size_t outputs) {
    const std::size_t h4 = 4 * hidden;
    return h4 * 1 + h4 * hidden + h4 + (layers - 1) * (h4 * hidden + h4 * hidden + h4) + outputs * hidden + outputs;
  }

  std::size_t hidden_size() const { return static_cast<std::size_t>(hidden_); }
  std::size_t num_layers() const { return layers_; }
  std::size_t output_size() const { return static_cast<std::size_t>(outputs_); }
  std::size_t num_params() const { return static_cast<std::size_t>(params_.size()); }

  Vector& params() { return params_; }
  const Vector& params() const { return params_; }

  Eigen::Index input_size(std::size_t l) const { return l == 0 ? 1 : hidden_; }

  MatrixMap w_in(std::size_t l) { return MatrixMap(params_.data() + offsets_[l].w_in, 4 * hidden_, input_size(l)); }
  ConstMatrixMap w_in(std::size_t l) const {
    return ConstMatrixMap(params_.data() + offsets_[l].w_in, 4 * hidden_, input_size(l));
  }
  MatrixMap w_rec(std::size_t l) { return MatrixMap(params_.data() + offsets_[l].w_rec, 4 * hidden_, hidden_); }
  ConstMatrixMap w_rec(std::size_t l) const {
    return ConstMatrixMap(params_.data() + offsets_[l].w_rec, 4 * hidden_, hidden_);
  }
  VectorMap bias(std::size_t l) { return VectorMap(params_.data() + offsets_[l].bias, 4 * hidden_); }
  ConstVectorMap bias(std::size_t l) const { return ConstVectorMap(params_.data() + offsets_[l].bias, 4 * hidden_); }
  MatrixMap head_w() { return MatrixMap(params_.data() + head_w_offset_, outputs_, hidden_); }
  ConstMatrixMap head_w() const { return ConstMatrixMap(params_.data() + head_w_offset_, outputs_, hidden_); }
  VectorMap head_b() { return VectorMap(params_.data() + head_b_offset_, outputs_); }
  ConstVectorMap head_b() const { return ConstVectorMap(params_.data() + head_b_offset_, outputs_); }

  // Offsets of each tensor inside params(), in declaration order.
  struct TensorSpan {
    const char* name;
    std::size_t layer;
    Eigen::Index offset;
    Eigen::Index size;
  };
  std::vector<TensorSpan> tensors() const {
    std::vector<TensorSpan> out;
    for (std::size_t l = 0; l < layers_; ++l) {
      out.push_back({"w_in", l, offsets_[l].w_in, 4 * hidden_ * input_size(l)});
      out.push_back({"w_rec", l, offsets_[l].w_rec, 4 * hidden_ * hidden_});
      out.push_back({"bias", l, offsets_[l].bias, 4 * hidden_});
    }
    out.push_back({"head_w", layers_, head_w_offset_, outputs_ * hidden_});
    out.push_back({"head_b", layers_, head_b_offset_, outputs_});
    return out;
  }

  // x: (seq_len x batch), one window per column. Returns (outputs x batch).
  Matrix forward(const Matrix& x) const {
    const Eigen::Index batch = x.cols();
    const Eigen::Index h = hidden_;
    std::vector<Matrix> hs(layers_, Matrix::Zero(h, batch));
    std::vector<Matrix> cs(layers_, Matrix::Zero(h, batch));
    Matrix z(4 * h, batch);
    for (Eigen::Index t = 0; t < x.rows(); ++t) {
      for (std::size_t l = 0; l < layers_; ++l) {
        if (l == 0) {
          z.noalias() = w_in(0) * x.row(t);
        } else {
          z.noalias() = w_in(l) * hs[l - 1];
        }
        z.noalias() += w_rec(l) * hs[l];
        z.colwise() += bias(l);
        activate(z);
        cs[l].array() = z.middleRows(h, h).array() * cs[l].array() +
                        z.topRows(h).array() * z.middleRows(2 * h, h).array();
        hs[l].array() = z.bottomRows(h).array() * cs[l].array().tanh();
      }
    }
    Matrix y = head_w() * hs.back();
    y.colwise() += head_b();
    return y;
  }

  // Adds scale * d(sum of squared errors)/d(params) to grad and returns the
  // sum of squared errors for this batch. With scale = 1 / (B_total * F)
  // the accumulated gradient is that of the mean squared error.
  Scalar accumulate_gradient(const Matrix& x, const Matrix& target, Scalar scale, Vector& grad) const {
    const Eigen::Index seq = x.rows();
    const Eigen::Index batch = x.cols();
    const Eigen::Index h = hidden_;
    const Eigen::Index cols = seq * batch;
    if (target.rows() != outputs_ || target.cols() != batch) {
      throw Error(ErrorCode::ShapeMismatch, "target shape does not match network output");
    }
    if (grad.size() != params_.size()) grad = Vector::Zero(params_.size());

    // Layer-0 input laid out as column t * batch + b.
    Matrix input0(1, cols);
    for (Eigen::Index t = 0; t < seq; ++t) input0.middleCols(t * batch, batch) = x.row(t);

    std::vector<Matrix> gates(layers_), cells(layers_), tanh_cells(layers_), hiddens(layers_);
    for (std::size_t l = 0; l < layers_; ++l) {
      const Matrix& in = l == 0 ? input0 : hiddens[l - 1];
      Matrix& g = gates[l];
      g.noalias() = w_in(l) * in;
      g.colwise() += bias(l);
      cells[l].resize(h, cols);
      tanh_cells[l].resize(h, cols);
      hiddens[l].resize(h, cols);
      for (Eigen::Index t = 0; t < seq; ++t) {
        auto zt = g.middleCols(t * batch, batch);
        if (t > 0) zt.noalias() += w_rec(l) * hiddens[l].middleCols((t - 1) * batch, batch);
        activate(zt);
        auto ct = cells[l].middleCols(t * batch, batch);
        if (t > 0) {
          ct.array() = zt.middleRows(h, h).array() * cells[l].middleCols((t - 1) * batch, batch).array() +
                       zt.topRows(h).array() * zt.middleRows(2 * h, h).array();
        } else {
          ct.array() = zt.topRows(h).array() * zt.middleRows(2 * h, h).array();
        }
        tanh_cells[l].middleCols(t * batch, batch).array() = ct.array().tanh();
        hiddens[l].middleCols(t * batch, batch).array() =
            zt.bottomRows(h).array() * tanh_cells[l].middleCols(t * batch, batch).array();
      }
    }

    const auto last = hiddens.back().middleCols((seq - 1) * batch, batch);
    Matrix y = head_w() * last;
    y.colwise() += head_b();
    const Matrix err = y - target;
    const Scalar sse = err.squaredNorm();

    const Matrix dy = (Scalar(2) * scale) * err;
    MatrixMap(grad.data() + head_w_offset_, outputs_, h).noalias() += dy * last.transpose();
    VectorMap(grad.data() + head_b_offset_, outputs_) += dy.rowwise().sum();

    // Gradient arriving at each layer's hidden outputs from the layer above
    // (or the head, which only sees the final step).
    Matrix dh_above = Matrix::Zero(h, cols);
    dh_above.middleCols((seq - 1) * batch, batch).noalias() = head_w().transpose() * dy;

    Matrix dz(4 * h, cols);
    Matrix dh_next(h, batch), dc_next(h, batch), dh(h, batch), dc(h, batch);
    for (std::size_t l = layers_; l-- > 0;) {
      dh_next.setZero();
      dc_next.setZero();
      for (Eigen::Index t = seq; t-- > 0;) {
        const auto zt = gates[l].middleCols(t * batch, batch);
        const auto gi = zt.topRows(h).array();
        const auto gf = zt.middleRows(h, h).array();
        const auto gg = zt.middleRows(2 * h, h).array();
        const auto go = zt.bottomRows(h).array();
        const auto tc = tanh_cells[l].middleCols(t * batch, batch).array();

        dh = dh_above.middleCols(t * batch, batch) + dh_next;
        dc.array() = dc_next.array() + dh.array() * go * (Scalar(1) - tc.square());

        auto dzt = dz.middleCols(t * batch, batch);
        dzt.topRows(h).array() = dc.array() * gg * gi * (Scalar(1) - gi);
        if (t > 0) {
          dzt.middleRows(h, h).array() =
              dc.array() * cells[l].middleCols((t - 1) * batch, batch).array() * gf * (Scalar(1) - gf);
        } else {
          dzt.middleRows(h, h).setZero();
        }
        dzt.middleRows(2 * h, h).array() = dc.array() * gi * (Scalar(1) - gg.square());
        dzt.bottomRows(h).array() = dh.array() * tc * go * (Scalar(1) - go);

        dc_next.array() = dc.array() * gf;
        dh_next.noalias() = w_rec(l).transpose() * dzt;
      }

      const Matrix& in = l == 0 ? input0 : hiddens[l - 1];
      const auto& off = offsets_[l];
      MatrixMap(grad.data() + off.w_in, 4 * h, input_size(l)).noalias() += dz * in.transpose();
      if (seq > 1) {
        MatrixMap(grad.data() + off.w_rec, 4 * h, h).noalias() +=
            dz.rightCols(cols - batch) * hiddens[l].leftCols(cols - batch).transpose();
      }
      VectorMap(grad.data() + off.bias, 4 * h) += dz.rowwise().sum();
      if (l > 0) dh_above.noalias() = w_in(l).transpose() * dz;
    }
    return sse;
  }

  template <typename Other>
  LstmNetwork<Other> cast() const {
    LstmNetwork<Other> out(static_cast<std::size_t>(hidden_), layers_, static_cast<std::size_t>(outputs_));
    out.params() = params_.template cast<Other>();
    return out;
  }

 private:
  struct LayerOffsets {
    Eigen::Index w_in;
    Eigen::Index w_rec;
    Eigen::Index bias;
  };

  // In-place gate nonlinearities on a (4H x B) pre-activation block.
  // sigmoid(x) = 0.5 * tanh(x / 2) + 0.5 keeps everything on the vectorized tanh path.
  template <typename Block>
  void activate(Block&& z) const {
    const Eigen::Index h = hidden_;
    auto sig = [](auto&& blk) { blk.array() = (blk.array() * Scalar(0.5)).tanh() * Scalar(0.5) + Scalar(0.5); };
    sig(z.topRows(2 * h));
    z.middleRows(2 * h, h).array() = z.middleRows(2 * h, h).array().tanh();
    sig(z.bottomRows(h));
  }

  Eigen::Index hidden_ = 0;
  std::size_t layers_ = 0;
  Eigen::Index outputs_ = 0;
  std::vector<LayerOffsets> offsets_;
  Eigen::Index head_w_offset_ = 0;
  Eigen::Index head_b_offset_ = 0;
  Vector params_;
};

}  // namespace mobivital
