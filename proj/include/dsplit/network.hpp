#pragma once

// C1 feedforward engine: scalar-output MLP with smooth activations, exact
// reverse-mode gradients w.r.t. inputs and parameters, and a JSON format
// whose decimal-string doubles round-trip bit-exactly.

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsplit/format.hpp"
#include "dsplit/linalg.hpp"
#include "dsplit/rng.hpp"

namespace dsplit {

enum class Activation { softplus, sigmoid, relu2 };

inline const char* activation_name(Activation a) {
  switch (a) {
    case Activation::softplus: return "softplus";
    case Activation::sigmoid: return "sigmoid";
    case Activation::relu2: return "relu2";
  }
  return "?";
}

inline Activation activation_from_name(const std::string& s) {
  if (s == "softplus") return Activation::softplus;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "relu2") return Activation::relu2;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

inline double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double act_value(Activation a, double x) {
  switch (a) {
    case Activation::softplus: return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    case Activation::sigmoid: return stable_sigmoid(x);
    case Activation::relu2: return x > 0.0 ? x * x : 0.0;
  }
  return 0.0;
}

inline double act_deriv(Activation a, double pre, double val) {
  switch (a) {
    case Activation::softplus: return stable_sigmoid(pre);
    case Activation::sigmoid: return val * (1.0 - val);
    case Activation::relu2: return pre > 0.0 ? 2.0 * pre : 0.0;
  }
  return 0.0;
}

// Fixed affine input map x -> (x - shift) * inv_scale, set once at
// construction (no trainable statistics).
struct Standardizer {
  bool enabled = false;
  Vec shift, inv_scale;

  static Standardizer from_box(const Vec& lo, const Vec& hi) {
    Standardizer s;
    s.enabled = true;
    const int d = static_cast<int>(lo.size());
    s.shift.resize(d);
    s.inv_scale.resize(d);
    for (int j = 0; j < d; ++j) {
      if (!(hi[j] > lo[j])) throw std::invalid_argument("standardizer: box must have hi > lo");
      s.shift[j] = 0.5 * (lo[j] + hi[j]);
      s.inv_scale[j] = 2.0 / (hi[j] - lo[j]);
    }
    return s;
  }
};

struct NetScratch {
  std::vector<Vec> pre, act, delta;
  Vec xs;
};

// Layer l maps width[l] -> width[l+1]; widths = [in, hidden..., 1].  The last
// layer is linear, all hidden layers share one activation.
class Network {
 public:
  Network() = default;
  Network(int in_dim, std::vector<int> hidden, Activation act, Standardizer std_map)
      : act_(act), std_(std::move(std_map)) {
    if (in_dim < 1) throw std::invalid_argument("network: input dim must be >= 1");
    if (hidden.empty()) throw std::invalid_argument("network: need at least one hidden layer");
    widths_.push_back(in_dim);
    for (int w : hidden) {
      if (w < 1) throw std::invalid_argument("network: hidden width must be >= 1");
      widths_.push_back(w);
    }
    widths_.push_back(1);
    if (std_.enabled && static_cast<int>(std_.shift.size()) != in_dim)
      throw std::invalid_argument("network: standardizer dim mismatch");
    size_t count = 0;
    for (size_t l = 0; l + 1 < widths_.size(); ++l) {
      w_off_.push_back(count);
      count += static_cast<size_t>(widths_[l + 1]) * widths_[l];
      b_off_.push_back(count);
      count += widths_[l + 1];
    }
    params_.assign(count, 0.0);
  }

  int input_dim() const { return widths_.front(); }
  int layer_count() const { return static_cast<int>(widths_.size()) - 1; }
  const std::vector<int>& widths() const { return widths_; }
  std::vector<int> hidden_widths() const {
    return std::vector<int>(widths_.begin() + 1, widths_.end() - 1);
  }
  Activation activation() const { return act_; }
  const Standardizer& standardizer() const { return std_; }
  size_t param_count() const { return params_.size(); }
  Vec& params() { return params_; }
  const Vec& params() const { return params_; }

  static size_t expected_param_count(int in_dim, const std::vector<int>& hidden) {
    size_t count = 0;
    int prev = in_dim;
    for (int w : hidden) {
      count += static_cast<size_t>(w) * prev + w;
      prev = w;
    }
    return count + prev + 1;
  }

  void prepare(NetScratch& s) const {
    const int layers = layer_count();
    s.pre.resize(layers);
    s.act.resize(layers);
    s.delta.resize(layers);
    for (int l = 0; l < layers; ++l) {
      s.pre[l].resize(widths_[l + 1]);
      s.act[l].resize(widths_[l + 1]);
      s.delta[l].resize(widths_[l + 1]);
    }
    s.xs.resize(widths_[0]);
  }

  double value(const double* x, NetScratch& s) const {
    forward(x, s);
    return s.act.back()[0];
  }

  double value(const Vec& x) const {
    NetScratch s;
    prepare(s);
    return value(x.data(), s);
  }

  // Reverse-mode gradient w.r.t. the raw (unstandardized) input.
  double value_and_grad(const double* x, double* gx, NetScratch& s) const {
    const double out = value(x, s);
    const int layers = layer_count();
    s.delta[layers - 1][0] = 1.0;
    for (int l = layers - 1; l > 0; --l) {
      backprop_layer(l, s.delta[l], s.delta[l - 1]);
      apply_deriv(l - 1, s);
    }
    const int d = widths_[0];
    const double* w0 = params_.data() + w_off_[0];
    for (int j = 0; j < d; ++j) {
      double acc = 0.0;
      for (int r = 0; r < widths_[1]; ++r) acc += w0[static_cast<size_t>(r) * d + j] * s.delta[0][r];
      gx[j] = std_.enabled ? acc * std_.inv_scale[j] : acc;
    }
    return out;
  }

  Vec grad_input(const Vec& x) const {
    NetScratch s;
    prepare(s);
    Vec g(widths_[0]);
    value_and_grad(x.data(), g.data(), s);
    return g;
  }

  // Accumulates resid * d(out)/d(theta) into grad (size param_count).
  void accumulate_param_grad(const double* x, double resid, double* grad, NetScratch& s) const {
    forward(x, s);
    const int layers = layer_count();
    s.delta[layers - 1][0] = resid;
    for (int l = layers - 1; l >= 0; --l) {
      const double* below = (l == 0) ? s.xs.data() : s.act[l - 1].data();
      const int n_in = widths_[l];
      const int n_out = widths_[l + 1];
      double* gw = grad + w_off_[l];
      double* gb = grad + b_off_[l];
      for (int r = 0; r < n_out; ++r) {
        const double dr = s.delta[l][r];
        double* row = gw + static_cast<size_t>(r) * n_in;
        for (int c = 0; c < n_in; ++c) row[c] += dr * below[c];
        gb[r] += dr;
      }
      if (l > 0) {
        backprop_layer(l, s.delta[l], s.delta[l - 1]);
        apply_deriv(l - 1, s);
      }
    }
  }

  // Mean-over-batch gradient of the scalar loss: grad = (1/M) sum_m
  // resid[m] * d(out(x_m))/d(theta).  Zero residuals give exactly zero.
  void backprop_params(const double* xs, int batch, const double* resid, Vec& grad,
                       NetScratch& s) const {
    grad.assign(params_.size(), 0.0);
    const int d = widths_[0];
    for (int m = 0; m < batch; ++m)
      accumulate_param_grad(xs + static_cast<size_t>(m) * d, resid[m], grad.data(), s);
    const double inv = 1.0 / batch;
    for (double& g : grad) g *= inv;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format"] = "dsplit-network-v1";
    j["input_dim"] = widths_.front();
    j["hidden"] = hidden_widths();
    j["activation"] = activation_name(act_);
    nlohmann::json st;
    st["enabled"] = std_.enabled;
    st["shift"] = strings_of(std_.shift);
    st["inv_scale"] = strings_of(std_.inv_scale);
    j["standardizer"] = st;
    j["params"] = strings_of(params_);
    return j;
  }

  static Network from_json(const nlohmann::json& j) {
    auto fail = [](const std::string& where, const std::string& what) -> void {
      throw std::runtime_error("network json: " + where + ": " + what);
    };
    if (!j.is_object()) fail("$", "expected object");
    if (!j.contains("format") || j["format"] != "dsplit-network-v1")
      fail("format", "missing or unsupported");
    for (const char* key : {"input_dim", "hidden", "activation", "standardizer", "params"})
      if (!j.contains(key)) fail(key, "missing");
    const int in_dim = j["input_dim"].get<int>();
    std::vector<int> hidden = j["hidden"].get<std::vector<int>>();
    const Activation act = activation_from_name(j["activation"].get<std::string>());
    const auto& st = j["standardizer"];
    Standardizer sd;
    sd.enabled = st["enabled"].get<bool>();
    sd.shift = doubles_of(st["shift"], "standardizer.shift");
    sd.inv_scale = doubles_of(st["inv_scale"], "standardizer.inv_scale");
    if (sd.enabled && static_cast<int>(sd.shift.size()) != in_dim)
      fail("standardizer.shift", "size mismatch with input_dim");
    if (sd.shift.size() != sd.inv_scale.size()) fail("standardizer", "shift/inv_scale size mismatch");
    Network net(in_dim, hidden, act, sd);
    Vec params = doubles_of(j["params"], "params");
    if (params.size() != net.param_count())
      fail("params", "expected " + std::to_string(net.param_count()) + " entries, got " +
                         std::to_string(params.size()));
    net.params_ = std::move(params);
    return net;
  }

 private:
  void forward(const double* x, NetScratch& s) const {
    const int d = widths_[0];
    if (std_.enabled)
      for (int j = 0; j < d; ++j) s.xs[j] = (x[j] - std_.shift[j]) * std_.inv_scale[j];
    else
      std::memcpy(s.xs.data(), x, sizeof(double) * d);
    const int layers = layer_count();
    const double* below = s.xs.data();
    for (int l = 0; l < layers; ++l) {
      const int n_in = widths_[l];
      const int n_out = widths_[l + 1];
      const double* w = params_.data() + w_off_[l];
      const double* b = params_.data() + b_off_[l];
      const bool linear = (l == layers - 1);
      for (int r = 0; r < n_out; ++r) {
        double acc = b[r];
        const double* row = w + static_cast<size_t>(r) * n_in;
        for (int c = 0; c < n_in; ++c) acc += row[c] * below[c];
        s.pre[l][r] = acc;
        s.act[l][r] = linear ? acc : act_value(act_, acc);
      }
      below = s.act[l].data();
    }
  }

  // delta_below = W_l^T delta_l  (pre-activation sensitivities, before deriv)
  void backprop_layer(int l, const Vec& delta, Vec& delta_below) const {
    const int n_in = widths_[l];
    const int n_out = widths_[l + 1];
    const double* w = params_.data() + w_off_[l];
    for (int c = 0; c < n_in; ++c) delta_below[c] = 0.0;
    for (int r = 0; r < n_out; ++r) {
      const double dr = delta[r];
      const double* row = w + static_cast<size_t>(r) * n_in;
      for (int c = 0; c < n_in; ++c) delta_below[c] += row[c] * dr;
    }
  }

  void apply_deriv(int l, NetScratch& s) const {
    for (size_t r = 0; r < s.delta[l].size(); ++r)
      s.delta[l][r] *= act_deriv(act_, s.pre[l][r], s.act[l][r]);
  }

  static nlohmann::json strings_of(const Vec& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (double x : v) arr.push_back(fmt_g17(x));
    return arr;
  }

  static Vec doubles_of(const nlohmann::json& arr, const std::string& where) {
    if (!arr.is_array()) throw std::runtime_error("network json: " + where + ": expected array");
    Vec v;
    v.reserve(arr.size());
    for (size_t k = 0; k < arr.size(); ++k) {
      const auto& e = arr[k];
      if (!e.is_string())
        throw std::runtime_error("network json: " + where + "[" + std::to_string(k) +
                                 "]: expected decimal string");
      v.push_back(parse_double(e.get<std::string>()));
    }
    return v;
  }

  std::vector<int> widths_;
  Activation act_ = Activation::softplus;
  Standardizer std_;
  Vec params_;
  std::vector<size_t> w_off_, b_off_;
};

// Zero-mean uniform weights scaled by 1/sqrt(fan_in); zero biases.
inline Network init_network(int in_dim, const std::vector<int>& hidden, Activation act,
                            const Standardizer& std_map, const RngStream& rng) {
  Network net(in_dim, hidden, act, std_map);
  RngEngine eng = rng.engine();
  Vec& p = net.params();
  size_t at = 0;
  int prev = in_dim;
  std::vector<int> outs(hidden);
  outs.push_back(1);
  for (int w : outs) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(prev));
    for (int k = 0; k < w * prev; ++k) p[at++] = eng.uniform(-scale, scale);
    for (int k = 0; k < w; ++k) p[at++] = 0.0;
    prev = w;
  }
  return net;
}

inline std::vector<int> default_hidden_widths(int dim) { return {dim + 10, dim + 10}; }

}  // namespace dsplit
