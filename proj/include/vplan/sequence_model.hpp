#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vplan/common.hpp"

namespace vplan {

enum class Architecture { kTransformer, kRecurrent };

std::string to_string(Architecture a);
Architecture parse_architecture(std::string_view s);

struct SequenceModelConfig {
  Architecture architecture = Architecture::kTransformer;
  std::size_t d = 32;
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t mlp_ratio = 4;
  std::size_t max_len = 512;
  double init_std = 0.02;

  void validate() const;
};

struct TransformerBlock {
  Matrix ln1_g, ln1_b;
  Matrix w_qkv, b_qkv;
  Matrix w_o, b_o;
  Matrix ln2_g, ln2_b;
  Matrix w_fc, b_fc;
  Matrix w_proj, b_proj;
};

struct TransformerWeights {
  Matrix pos;
  std::vector<TransformerBlock> blocks;
  Matrix lnf_g, lnf_b;
  Matrix w_out, b_out;
};

// Gates are packed [update | reset | candidate].
struct RecurrentWeights {
  Matrix w_x, b_x;
  Matrix w_h, b_h;
  Matrix w_out, b_out;
};

struct LayerNormTrace {
  Matrix xhat;
  Vector rstd;
};

struct BlockTrace {
  Matrix x_in;
  LayerNormTrace ln1;
  Matrix a, qkv;
  std::vector<Matrix> probs;  // per head, n x n
  Matrix attn;                // concatenated head outputs
  Matrix x_mid;
  LayerNormTrace ln2;
  Matrix b, pre_act, act;
};

struct TransformerTrace {
  std::vector<BlockTrace> blocks;
  Matrix x_final;
  LayerNormTrace lnf;
  Matrix z;
};

struct RecurrentTrace {
  Matrix x, h_prev, h, gx, gh, update, reset, cand;
};

/// Activations of one full-sequence forward pass, consumed by backward().
struct SequenceTrace {
  std::variant<TransformerTrace, RecurrentTrace> trace;
};

struct KvCache {
  std::vector<double> keys;    // position-major, d per position
  std::vector<double> values;
};

/// Incremental decoding state. Copyable, so beams can fork it.
struct SequenceState {
  std::size_t length = 0;
  std::vector<KvCache> kv;  // transformer
  RowVector hidden;         // recurrent
  RowVector last_output;    // prediction for the next position
};

/// Next-representation predictor. forward(X) returns Y with
/// Y.row(j) = prediction of X.row(j+1) from X.rows(0..j).
class SequenceModel {
 public:
  SequenceModel() = default;

  static SequenceModel initialize(const SequenceModelConfig& cfg, std::uint64_t seed);
  /// Same shapes, all parameters zero. Used as a gradient accumulator.
  SequenceModel zeros_like() const;

  const SequenceModelConfig& config() const { return cfg_; }
  std::size_t dim() const { return cfg_.d; }

  Matrix forward(const Matrix& x, SequenceTrace* trace = nullptr) const;
  /// Accumulates parameter gradients into `grad`, returns dL/dX.
  Matrix backward(const SequenceTrace& trace, const Matrix& d_out, SequenceModel& grad) const;

  SequenceState start() const;
  /// Consumes one input row; returns (and stores) the prediction for the next position.
  const RowVector& advance(SequenceState& state, const RowVector& x) const;

  template <class F>
  void for_each_param(F&& f) {
    visit_params(*this, f);
  }
  template <class F>
  void for_each_param(F&& f) const {
    visit_params(*this, f);
  }

 private:
  template <class Self, class F>
  static void visit_params(Self& self, F& f) {
    if (auto* t = std::get_if<TransformerWeights>(&self.w_)) {
      f("seq.pos", t->pos);
      for (std::size_t i = 0; i < t->blocks.size(); ++i) {
        auto& b = t->blocks[i];
        const std::string p = "seq.block" + std::to_string(i) + ".";
        f(p + "ln1_g", b.ln1_g);
        f(p + "ln1_b", b.ln1_b);
        f(p + "w_qkv", b.w_qkv);
        f(p + "b_qkv", b.b_qkv);
        f(p + "w_o", b.w_o);
        f(p + "b_o", b.b_o);
        f(p + "ln2_g", b.ln2_g);
        f(p + "ln2_b", b.ln2_b);
        f(p + "w_fc", b.w_fc);
        f(p + "b_fc", b.b_fc);
        f(p + "w_proj", b.w_proj);
        f(p + "b_proj", b.b_proj);
      }
      f("seq.lnf_g", t->lnf_g);
      f("seq.lnf_b", t->lnf_b);
      f("seq.w_out", t->w_out);
      f("seq.b_out", t->b_out);
    } else {
      auto& r = std::get<RecurrentWeights>(self.w_);
      f("seq.w_x", r.w_x);
      f("seq.b_x", r.b_x);
      f("seq.w_h", r.w_h);
      f("seq.b_h", r.b_h);
      f("seq.w_out", r.w_out);
      f("seq.b_out", r.b_out);
    }
  }

  SequenceModelConfig cfg_;
  std::variant<TransformerWeights, RecurrentWeights> w_;
};

}  // namespace vplan
