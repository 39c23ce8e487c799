#include "vplan/sequence_model.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "vplan/rng.hpp"

namespace vplan {

std::string to_string(Architecture a) { return a == Architecture::kTransformer ? "transformer" : "recurrent"; }

Architecture parse_architecture(std::string_view s) {
  if (s == "transformer") return Architecture::kTransformer;
  if (s == "recurrent" || s == "gru") return Architecture::kRecurrent;
  throw ConfigError("unknown architecture '" + std::string(s) + "'");
}

void SequenceModelConfig::validate() const {
  if (d == 0) throw ConfigError("model dimension must be positive");
  if (architecture == Architecture::kTransformer) {
    if (layers == 0 || heads == 0 || d % heads != 0) throw ConfigError("transformer: heads must divide d");
    if (mlp_ratio == 0 || max_len == 0) throw ConfigError("transformer: mlp_ratio/max_len must be positive");
  }
  if (!(init_std >= 0)) throw ConfigError("init_std must be >= 0");
}

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, double stddev, SplitMix64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = stddev * n01(rng);
  return m;
}

Matrix ones(Eigen::Index cols) { return Matrix::Ones(1, cols); }
Matrix zeros(Eigen::Index rows, Eigen::Index cols) { return Matrix::Zero(rows, cols); }

Matrix layer_norm(const Matrix& x, const Matrix& g, const Matrix& b, LayerNormTrace* tr) {
  const Eigen::Index n = x.rows();
  const auto d = static_cast<double>(x.cols());
  Matrix xhat(n, x.cols());
  Vector rstd(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = x.row(i).sum() / d;
    const double var = (x.row(i).array() - mu).square().sum() / d;
    rstd[i] = 1.0 / std::sqrt(var + kLnEps);
    xhat.row(i) = (x.row(i).array() - mu) * rstd[i];
  }
  Matrix y = (xhat.array().rowwise() * g.row(0).array()).rowwise() + b.row(0).array();
  if (tr) {
    tr->xhat = std::move(xhat);
    tr->rstd = std::move(rstd);
  }
  return y;
}

Matrix layer_norm_backward(const Matrix& dy, const LayerNormTrace& tr, const Matrix& g, Matrix& dg, Matrix& db) {
  dg += (dy.array() * tr.xhat.array()).colwise().sum().matrix();
  db += dy.colwise().sum();
  const Matrix dxhat = dy.array().rowwise() * g.row(0).array();
  const auto d = static_cast<double>(dy.cols());
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const double m1 = dxhat.row(i).sum() / d;
    const double m2 = dxhat.row(i).dot(tr.xhat.row(i)) / d;
    dx.row(i) = tr.rstd[i] * (dxhat.row(i).array() - m1 - tr.xhat.row(i).array() * m2);
  }
  return dx;
}

Matrix gelu(const Matrix& x) {
  return x.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::tanh(kGeluC * (v + 0.044715 * v * v * v))); });
}

Matrix gelu_grad(const Matrix& x) {
  return x.unaryExpr([](double v) {
    const double t = std::tanh(kGeluC * (v + 0.044715 * v * v * v));
    return 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * 0.044715 * v * v);
  });
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

Matrix add_row(const Matrix& m, const Matrix& row) { return m.rowwise() + row.row(0); }

}  // namespace

SequenceModel SequenceModel::initialize(const SequenceModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  SplitMix64 rng(derive_seed(seed, {tag("sequence-model")}));
  const auto d = static_cast<Eigen::Index>(cfg.d);
  const double s = cfg.init_std;
  SequenceModel m;
  m.cfg_ = cfg;
  if (cfg.architecture == Architecture::kTransformer) {
    const auto hidden = static_cast<Eigen::Index>(cfg.d * cfg.mlp_ratio);
    TransformerWeights w;
    w.pos = gaussian(static_cast<Eigen::Index>(cfg.max_len), d, s, rng);
    for (std::size_t l = 0; l < cfg.layers; ++l) {
      TransformerBlock b;
      b.ln1_g = ones(d);
      b.ln1_b = zeros(1, d);
      b.w_qkv = gaussian(d, 3 * d, s, rng);
      b.b_qkv = zeros(1, 3 * d);
      b.w_o = gaussian(d, d, s, rng);
      b.b_o = zeros(1, d);
      b.ln2_g = ones(d);
      b.ln2_b = zeros(1, d);
      b.w_fc = gaussian(d, hidden, s, rng);
      b.b_fc = zeros(1, hidden);
      b.w_proj = gaussian(hidden, d, s, rng);
      b.b_proj = zeros(1, d);
      w.blocks.push_back(std::move(b));
    }
    w.lnf_g = ones(d);
    w.lnf_b = zeros(1, d);
    w.w_out = gaussian(d, d, s, rng);
    w.b_out = zeros(1, d);
    m.w_ = std::move(w);
  } else {
    RecurrentWeights w;
    w.w_x = gaussian(d, 3 * d, s, rng);
    w.b_x = zeros(1, 3 * d);
    w.w_h = gaussian(d, 3 * d, s, rng);
    w.b_h = zeros(1, 3 * d);
    w.w_out = gaussian(d, d, s, rng);
    w.b_out = zeros(1, d);
    m.w_ = std::move(w);
  }
  return m;
}

SequenceModel SequenceModel::zeros_like() const {
  SequenceModel z = *this;
  z.for_each_param([](std::string_view, Matrix& p) { p.setZero(); });
  return z;
}

// ------------------------------------------------------------- transformer

namespace {

Matrix transformer_forward(const SequenceModelConfig& cfg, const TransformerWeights& w, const Matrix& x,
                           TransformerTrace* tr) {
  const Eigen::Index n = x.rows();
  const auto d = static_cast<Eigen::Index>(cfg.d);
  const auto heads = static_cast<Eigen::Index>(cfg.heads);
  const Eigen::Index dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  if (n > w.pos.rows()) throw std::length_error("sequence longer than max_len");

  Matrix h = x + w.pos.topRows(n);
  if (tr) tr->blocks.resize(w.blocks.size());
  for (std::size_t l = 0; l < w.blocks.size(); ++l) {
    const auto& b = w.blocks[l];
    BlockTrace local;
    BlockTrace& bt = tr ? tr->blocks[l] : local;
    bt.x_in = h;
    bt.a = layer_norm(h, b.ln1_g, b.ln1_b, &bt.ln1);
    bt.qkv = add_row(bt.a * b.w_qkv, b.b_qkv);
    bt.attn.resize(n, d);
    bt.probs.resize(static_cast<std::size_t>(heads));
    for (Eigen::Index hd = 0; hd < heads; ++hd) {
      const auto q = bt.qkv.middleCols(hd * dh, dh);
      const auto k = bt.qkv.middleCols(d + hd * dh, dh);
      const auto v = bt.qkv.middleCols(2 * d + hd * dh, dh);
      Matrix p = (q * k.transpose()) * scale;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double mx = p.row(i).head(i + 1).maxCoeff();
        double sum = 0.0;
        for (Eigen::Index j = 0; j <= i; ++j) sum += (p(i, j) = std::exp(p(i, j) - mx));
        p.row(i).head(i + 1) /= sum;
        p.row(i).tail(n - i - 1).setZero();
      }
      bt.attn.middleCols(hd * dh, dh) = p * v;
      bt.probs[static_cast<std::size_t>(hd)] = std::move(p);
    }
    h = h + add_row(bt.attn * b.w_o, b.b_o);
    bt.x_mid = h;
    bt.b = layer_norm(h, b.ln2_g, b.ln2_b, &bt.ln2);
    bt.pre_act = add_row(bt.b * b.w_fc, b.b_fc);
    bt.act = gelu(bt.pre_act);
    h = h + add_row(bt.act * b.w_proj, b.b_proj);
  }
  LayerNormTrace lnf;
  Matrix z = layer_norm(h, w.lnf_g, w.lnf_b, &lnf);
  Matrix y = add_row(z * w.w_out, w.b_out);
  if (tr) {
    tr->x_final = std::move(h);
    tr->lnf = std::move(lnf);
    tr->z = std::move(z);
  }
  return y;
}

Matrix transformer_backward(const SequenceModelConfig& cfg, const TransformerWeights& w,
                            const TransformerTrace& tr, const Matrix& dy, TransformerWeights& g) {
  const Eigen::Index n = dy.rows();
  const auto d = static_cast<Eigen::Index>(cfg.d);
  const auto heads = static_cast<Eigen::Index>(cfg.heads);
  const Eigen::Index dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  g.w_out += tr.z.transpose() * dy;
  g.b_out += dy.colwise().sum();
  Matrix dh_ = layer_norm_backward(dy * w.w_out.transpose(), tr.lnf, w.lnf_g, g.lnf_g, g.lnf_b);

  for (std::size_t li = w.blocks.size(); li-- > 0;) {
    const auto& b = w.blocks[li];
    auto& gb = g.blocks[li];
    const auto& bt = tr.blocks[li];

    // MLP branch.
    gb.w_proj += bt.act.transpose() * dh_;
    gb.b_proj += dh_.colwise().sum();
    const Matrix d_pre = (dh_ * b.w_proj.transpose()).array() * gelu_grad(bt.pre_act).array();
    gb.w_fc += bt.b.transpose() * d_pre;
    gb.b_fc += d_pre.colwise().sum();
    dh_ += layer_norm_backward(d_pre * b.w_fc.transpose(), bt.ln2, b.ln2_g, gb.ln2_g, gb.ln2_b);

    // Attention branch.
    gb.w_o += bt.attn.transpose() * dh_;
    gb.b_o += dh_.colwise().sum();
    const Matrix d_attn = dh_ * b.w_o.transpose();
    Matrix d_qkv = Matrix::Zero(n, 3 * d);
    for (Eigen::Index hd = 0; hd < heads; ++hd) {
      const Matrix& p = bt.probs[static_cast<std::size_t>(hd)];
      const auto q = bt.qkv.middleCols(hd * dh, dh);
      const auto k = bt.qkv.middleCols(d + hd * dh, dh);
      const auto v = bt.qkv.middleCols(2 * d + hd * dh, dh);
      const auto d_o = d_attn.middleCols(hd * dh, dh);
      const Matrix d_p = d_o * v.transpose();
      d_qkv.middleCols(2 * d + hd * dh, dh) += p.transpose() * d_o;
      Matrix d_s(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double dot = d_p.row(i).dot(p.row(i));
        d_s.row(i) = p.row(i).array() * (d_p.row(i).array() - dot);
      }
      d_s *= scale;
      d_qkv.middleCols(hd * dh, dh) += d_s * k;
      d_qkv.middleCols(d + hd * dh, dh) += d_s.transpose() * q;
    }
    gb.w_qkv += bt.a.transpose() * d_qkv;
    gb.b_qkv += d_qkv.colwise().sum();
    dh_ += layer_norm_backward(d_qkv * b.w_qkv.transpose(), bt.ln1, b.ln1_g, gb.ln1_g, gb.ln1_b);
  }
  g.pos.topRows(n) += dh_;
  return dh_;
}

RowVector layer_norm_row(const RowVector& x, const Matrix& g, const Matrix& b) {
  const auto d = static_cast<double>(x.size());
  const double mu = x.sum() / d;
  const double var = (x.array() - mu).square().sum() / d;
  const double rstd = 1.0 / std::sqrt(var + kLnEps);
  return ((x.array() - mu) * rstd * g.row(0).array() + b.row(0).array()).matrix();
}

void transformer_advance(const SequenceModelConfig& cfg, const TransformerWeights& w, SequenceState& st,
                         const RowVector& input) {
  const auto d = static_cast<Eigen::Index>(cfg.d);
  const auto heads = static_cast<Eigen::Index>(cfg.heads);
  const Eigen::Index dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const auto t = static_cast<Eigen::Index>(st.length);
  if (t >= w.pos.rows()) throw std::length_error("sequence longer than max_len");
  if (st.kv.size() != w.blocks.size()) st.kv.resize(w.blocks.size());

  RowVector x = input + w.pos.row(t);
  RowVector o(d);
  std::vector<double> scores(static_cast<std::size_t>(t + 1));
  for (std::size_t l = 0; l < w.blocks.size(); ++l) {
    const auto& b = w.blocks[l];
    auto& cache = st.kv[l];
    const RowVector a = layer_norm_row(x, b.ln1_g, b.ln1_b);
    const RowVector qkv = a * b.w_qkv + b.b_qkv;
    cache.keys.insert(cache.keys.end(), qkv.data() + d, qkv.data() + 2 * d);
    cache.values.insert(cache.values.end(), qkv.data() + 2 * d, qkv.data() + 3 * d);
    const Eigen::Map<const Matrix> keys(cache.keys.data(), t + 1, d);
    const Eigen::Map<const Matrix> values(cache.values.data(), t + 1, d);
    for (Eigen::Index hd = 0; hd < heads; ++hd) {
      const auto q = qkv.segment(hd * dh, dh);
      double mx = -std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j <= t; ++j) {
        scores[static_cast<std::size_t>(j)] = scale * keys.row(j).segment(hd * dh, dh).dot(q);
        mx = std::max(mx, scores[static_cast<std::size_t>(j)]);
      }
      double sum = 0.0;
      for (auto& s : scores) sum += (s = std::exp(s - mx));
      auto oh = o.segment(hd * dh, dh);
      oh.setZero();
      for (Eigen::Index j = 0; j <= t; ++j)
        oh += (scores[static_cast<std::size_t>(j)] / sum) * values.row(j).segment(hd * dh, dh);
    }
    x += o * b.w_o + b.b_o;
    const RowVector bn = layer_norm_row(x, b.ln2_g, b.ln2_b);
    const Matrix act = gelu(bn * b.w_fc + b.b_fc);
    x += act * b.w_proj + b.b_proj;
  }
  st.last_output = layer_norm_row(x, w.lnf_g, w.lnf_b) * w.w_out + w.b_out;
  ++st.length;
}

// --------------------------------------------------------------- recurrent

struct GruStep {
  RowVector h, z, r, n;
};

GruStep gru_cell(const RecurrentWeights& w, const RowVector& gx, const RowVector& h_prev, RowVector* gh_out) {
  const Eigen::Index d = h_prev.size();
  const RowVector gh = h_prev * w.w_h + w.b_h;
  GruStep s;
  s.z = (gx.segment(0, d) + gh.segment(0, d)).unaryExpr(&sigmoid);
  s.r = (gx.segment(d, d) + gh.segment(d, d)).unaryExpr(&sigmoid);
  s.n = (gx.segment(2 * d, d).array() + s.r.array() * gh.segment(2 * d, d).array()).tanh().matrix();
  s.h = ((1.0 - s.z.array()) * s.n.array() + s.z.array() * h_prev.array()).matrix();
  if (gh_out) *gh_out = gh;
  return s;
}

Matrix recurrent_forward(const RecurrentWeights& w, const Matrix& x, RecurrentTrace* tr) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = w.w_out.rows();
  const Matrix gx = add_row(x * w.w_x, w.b_x);
  Matrix hs(n, d), h_prev(n, d), gh(n, 3 * d), zs(n, d), rs(n, d), ns(n, d);
  RowVector h = RowVector::Zero(d);
  RowVector gh_row;
  for (Eigen::Index t = 0; t < n; ++t) {
    h_prev.row(t) = h;
    GruStep s = gru_cell(w, gx.row(t), h, &gh_row);
    gh.row(t) = gh_row;
    zs.row(t) = s.z;
    rs.row(t) = s.r;
    ns.row(t) = s.n;
    h = s.h;
    hs.row(t) = h;
  }
  Matrix y = add_row(hs * w.w_out, w.b_out);
  if (tr) {
    tr->x = x;
    tr->h_prev = std::move(h_prev);
    tr->h = std::move(hs);
    tr->gx = gx;
    tr->gh = std::move(gh);
    tr->update = std::move(zs);
    tr->reset = std::move(rs);
    tr->cand = std::move(ns);
  }
  return y;
}

Matrix recurrent_backward(const RecurrentWeights& w, const RecurrentTrace& tr, const Matrix& dy,
                          RecurrentWeights& g) {
  const Eigen::Index n = dy.rows();
  const Eigen::Index d = w.w_out.rows();
  g.w_out += tr.h.transpose() * dy;
  g.b_out += dy.colwise().sum();
  const Matrix dh_out = dy * w.w_out.transpose();
  Matrix dgx(n, 3 * d), dgh(n, 3 * d);
  RowVector dh_next = RowVector::Zero(d);
  for (Eigen::Index t = n; t-- > 0;) {
    const RowVector dh = dh_out.row(t) + dh_next;
    const auto z = tr.update.row(t).array();
    const auto r = tr.reset.row(t).array();
    const auto c = tr.cand.row(t).array();
    const auto hp = tr.h_prev.row(t).array();
    const RowVector dz = (dh.array() * (hp - c) * z * (1.0 - z)).matrix();
    const RowVector dc = (dh.array() * (1.0 - z) * (1.0 - c * c)).matrix();
    const RowVector dr = (dc.array() * tr.gh.row(t).segment(2 * d, d).array() * r * (1.0 - r)).matrix();
    dgx.row(t) << dz, dr, dc;
    dgh.row(t) << dz, dr, (dc.array() * r).matrix();
    dh_next = (dh.array() * z).matrix() + dgh.row(t) * w.w_h.transpose();
  }
  g.w_x += tr.x.transpose() * dgx;
  g.b_x += dgx.colwise().sum();
  g.w_h += tr.h_prev.transpose() * dgh;
  g.b_h += dgh.colwise().sum();
  return dgx * w.w_x.transpose();
}

}  // namespace

Matrix SequenceModel::forward(const Matrix& x, SequenceTrace* trace) const {
  if (x.cols() != static_cast<Eigen::Index>(cfg_.d)) throw std::invalid_argument("sequence model: width mismatch");
  if (const auto* t = std::get_if<TransformerWeights>(&w_)) {
    if (!trace) return transformer_forward(cfg_, *t, x, nullptr);
    trace->trace = TransformerTrace{};
    return transformer_forward(cfg_, *t, x, &std::get<TransformerTrace>(trace->trace));
  }
  const auto& r = std::get<RecurrentWeights>(w_);
  if (!trace) return recurrent_forward(r, x, nullptr);
  trace->trace = RecurrentTrace{};
  return recurrent_forward(r, x, &std::get<RecurrentTrace>(trace->trace));
}

Matrix SequenceModel::backward(const SequenceTrace& trace, const Matrix& d_out, SequenceModel& grad) const {
  if (const auto* t = std::get_if<TransformerWeights>(&w_))
    return transformer_backward(cfg_, *t, std::get<TransformerTrace>(trace.trace), d_out,
                                std::get<TransformerWeights>(grad.w_));
  return recurrent_backward(std::get<RecurrentWeights>(w_), std::get<RecurrentTrace>(trace.trace), d_out,
                            std::get<RecurrentWeights>(grad.w_));
}

SequenceState SequenceModel::start() const {
  SequenceState s;
  const auto d = static_cast<Eigen::Index>(cfg_.d);
  if (std::holds_alternative<TransformerWeights>(w_)) {
    s.kv.resize(cfg_.layers);
  } else {
    s.hidden = RowVector::Zero(d);
  }
  return s;
}

const RowVector& SequenceModel::advance(SequenceState& state, const RowVector& x) const {
  if (x.size() != static_cast<Eigen::Index>(cfg_.d)) throw std::invalid_argument("sequence model: width mismatch");
  if (const auto* t = std::get_if<TransformerWeights>(&w_)) {
    transformer_advance(cfg_, *t, state, x);
  } else {
    const auto& r = std::get<RecurrentWeights>(w_);
    const RowVector gx = x * r.w_x + r.b_x;
    state.hidden = gru_cell(r, gx, state.hidden, nullptr).h;
    state.last_output = state.hidden * r.w_out + r.b_out;
    ++state.length;
  }
  return state.last_output;
}

}  // namespace vplan
