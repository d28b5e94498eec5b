#include "lumenfix/convnet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lumenfix/rng.hpp"
#include "serialize.hpp"

namespace lumenfix::net {

Tensor3 conv2d(const Tensor3& x, const ConvWeights& wts, int stride) {
  if (wts.c_in != x.channels) throw std::invalid_argument("conv2d: channel mismatch");
  if (stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
  if (!wts.bias.empty() && static_cast<int>(wts.bias.size()) != wts.c_out)
    throw std::invalid_argument("conv2d: bias size mismatch");
  const int k = wts.kernel;
  const int pad = k / 2;
  const int oh = (x.height + 2 * pad - k) / stride + 1;
  const int ow = (x.width + 2 * pad - k) / stride + 1;
  if (oh < 1 || ow < 1) throw std::invalid_argument("conv2d: output would be empty");

  Tensor3 out(wts.c_out, oh, ow);
  for (int co = 0; co < wts.c_out; ++co) {
    for (int i = 0; i < oh; ++i) {
      for (int j = 0; j < ow; ++j) {
        double acc = wts.bias.empty() ? 0.0 : wts.bias[co];
        for (int ci = 0; ci < wts.c_in; ++ci) {
          for (int u = 0; u < k; ++u) {
            const int yy = i * stride + u - pad;
            if (yy < 0 || yy >= x.height) continue;
            for (int v = 0; v < k; ++v) {
              const int xx = j * stride + v - pad;
              if (xx < 0 || xx >= x.width) continue;
              acc += wts.at(co, ci, u, v) * x.at(ci, yy, xx);
            }
          }
        }
        out.at(co, i, j) = acc;
      }
    }
  }
  return out;
}

namespace {

Tensor3 depthwise_only(const Tensor3& x, const DepthwiseWeights& dw, int stride) {
  if (dw.channels != x.channels) throw std::invalid_argument("depthwise: channel mismatch");
  const int k = dw.kernel;
  const int pad = k / 2;
  const int oh = (x.height + 2 * pad - k) / stride + 1;
  const int ow = (x.width + 2 * pad - k) / stride + 1;
  if (oh < 1 || ow < 1) throw std::invalid_argument("depthwise: output would be empty");

  Tensor3 out(x.channels, oh, ow);
  for (int c = 0; c < x.channels; ++c) {
    for (int i = 0; i < oh; ++i) {
      for (int j = 0; j < ow; ++j) {
        double acc = 0.0;
        for (int u = 0; u < k; ++u) {
          const int yy = i * stride + u - pad;
          if (yy < 0 || yy >= x.height) continue;
          for (int v = 0; v < k; ++v) {
            const int xx = j * stride + v - pad;
            if (xx < 0 || xx >= x.width) continue;
            acc += dw.at(c, u, v) * x.at(c, yy, xx);
          }
        }
        out.at(c, i, j) = acc;
      }
    }
  }
  return out;
}

Tensor3 pointwise_only(const Tensor3& t, const PointwiseWeights& pw) {
  if (pw.c_in != t.channels) throw std::invalid_argument("pointwise: channel mismatch");
  Tensor3 out(pw.c_out, t.height, t.width);
  for (int co = 0; co < pw.c_out; ++co) {
    for (int i = 0; i < t.height; ++i) {
      for (int j = 0; j < t.width; ++j) {
        double acc = 0.0;
        for (int ci = 0; ci < pw.c_in; ++ci) acc += pw.at(co, ci) * t.at(ci, i, j);
        out.at(co, i, j) = acc;
      }
    }
  }
  return out;
}

void softmax_inplace(Tensor3& t) {
  const double m = *std::max_element(t.values.begin(), t.values.end());
  double sum = 0.0;
  for (double& v : t.values) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : t.values) v /= sum;
}

Tensor3 global_avg_pool_of(const Tensor3& x) {
  Tensor3 pooled(x.channels, 1, 1);
  const double inv = 1.0 / (static_cast<double>(x.height) * x.width);
  for (int c = 0; c < x.channels; ++c) {
    double s = 0.0;
    for (int y = 0; y < x.height; ++y)
      for (int xx = 0; xx < x.width; ++xx) s += x.at(c, y, xx);
    pooled.at(c, 0, 0) = s * inv;
  }
  return pooled;
}

}  // namespace

Tensor3 depthwise_separable(const Tensor3& x, const DepthwiseWeights& dw,
                            const PointwiseWeights& pw, int stride) {
  return pointwise_only(depthwise_only(x, dw, stride), pw);
}

LayerSpec LayerSpec::standard_conv(int c_in, int c_out, int k, int stride) {
  return {LayerKind::standard_conv, c_in, c_out, k, stride, 0, 0};
}
LayerSpec LayerSpec::depthwise_separable(int c_in, int c_out, int k, int stride) {
  return {LayerKind::depthwise_separable, c_in, c_out, k, stride, 0, 0};
}
LayerSpec LayerSpec::relu() { return {LayerKind::relu, 0, 0, 0, 1, 0, 0}; }
LayerSpec LayerSpec::global_avg_pool() { return {LayerKind::global_avg_pool, 0, 0, 0, 1, 0, 0}; }
LayerSpec LayerSpec::dense(int f_in, int f_out) {
  return {LayerKind::dense, 0, 0, 0, 1, f_in, f_out};
}
LayerSpec LayerSpec::softmax() { return {LayerKind::softmax, 0, 0, 0, 1, 0, 0}; }

void NetSpec::validate() const {
  bool saw_conv = false;
  for (size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    switch (l.kind) {
      case LayerKind::standard_conv:
        if (l.c_in < 1 || l.c_out < 1 || l.kernel < 1 || l.stride < 1)
          throw std::invalid_argument("NetSpec: bad conv layer at index " + std::to_string(i));
        saw_conv = true;
        break;
      case LayerKind::depthwise_separable:
        if (!saw_conv)
          throw std::invalid_argument("NetSpec: first convolutional layer must be standard");
        if (l.c_in < 1 || l.c_out < 1 || l.kernel < 1 || l.stride < 1)
          throw std::invalid_argument("NetSpec: bad separable layer at index " + std::to_string(i));
        break;
      case LayerKind::dense:
        if (l.f_in < 1 || l.f_out < 1)
          throw std::invalid_argument("NetSpec: bad dense layer at index " + std::to_string(i));
        break;
      case LayerKind::softmax:
        if (i + 1 != layers.size())
          throw std::invalid_argument("NetSpec: softmax must be the final layer");
        break;
      default:
        break;
    }
  }
  if (!layers.empty() && layers.back().kind != LayerKind::softmax)
    throw std::invalid_argument("NetSpec: final layer must be softmax");
}

NetSpec NetSpec::desk_default(int num_classes) {
  NetSpec spec;
  spec.layers = {
      LayerSpec::standard_conv(3, 8, 3, 1),
      LayerSpec::relu(),
      LayerSpec::depthwise_separable(8, 16, 3, 2),
      LayerSpec::relu(),
      LayerSpec::depthwise_separable(16, 32, 3, 2),
      LayerSpec::relu(),
      LayerSpec::global_avg_pool(),
      LayerSpec::dense(32, num_classes),
      LayerSpec::softmax(),
  };
  return spec;
}

NetSpec NetSpec::all_standard_variant(const NetSpec& spec) {
  NetSpec out = spec;
  for (LayerSpec& l : out.layers) {
    if (l.kind == LayerKind::depthwise_separable) l.kind = LayerKind::standard_conv;
  }
  return out;
}

long param_count(const NetSpec& spec) {
  long total = 0;
  for (const LayerSpec& l : spec.layers) {
    switch (l.kind) {
      case LayerKind::standard_conv:
        total += static_cast<long>(l.c_out) * l.c_in * l.kernel * l.kernel;
        break;
      case LayerKind::depthwise_separable:
        total +=
            static_cast<long>(l.c_in) * l.kernel * l.kernel + static_cast<long>(l.c_out) * l.c_in;
        break;
      case LayerKind::dense:
        total += static_cast<long>(l.f_in) * l.f_out + l.f_out;
        break;
      default:
        break;
    }
  }
  return total;
}

namespace {

void init_uniform(std::vector<double>& w, int fan_in, int fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& v : w) v = rng.uniform(-bound, bound);
}

}  // namespace

Network::Network(NetSpec spec, uint64_t seed) : spec_(std::move(spec)) {
  spec_.validate();
  Rng rng(seed);
  params_.resize(spec_.layers.size());
  for (size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerSpec& l = spec_.layers[i];
    LayerParams& p = params_[i];
    switch (l.kind) {
      case LayerKind::standard_conv:
        p.w.assign(static_cast<size_t>(l.c_out) * l.c_in * l.kernel * l.kernel, 0.0);
        init_uniform(p.w, l.c_in * l.kernel * l.kernel, l.c_out * l.kernel * l.kernel, rng);
        break;
      case LayerKind::depthwise_separable:
        p.w.assign(static_cast<size_t>(l.c_in) * l.kernel * l.kernel, 0.0);
        init_uniform(p.w, l.kernel * l.kernel, l.kernel * l.kernel, rng);
        p.w2.assign(static_cast<size_t>(l.c_out) * l.c_in, 0.0);
        init_uniform(p.w2, l.c_in, l.c_out, rng);
        break;
      case LayerKind::dense:
        p.w.assign(static_cast<size_t>(l.f_out) * l.f_in, 0.0);
        init_uniform(p.w, l.f_in, l.f_out, rng);
        p.b.assign(static_cast<size_t>(l.f_out), 0.0);
        break;
      default:
        break;
    }
  }
}

struct Network::Trace {
  std::vector<Tensor3> inputs;  // inputs[i] feeds layer i
  Tensor3 output;               // final probabilities
};

namespace {

Tensor3 apply_layer(const LayerSpec& l, const std::vector<double>& w,
                    const std::vector<double>& w2, const std::vector<double>& b, Tensor3 cur) {
  switch (l.kind) {
    case LayerKind::standard_conv:
      return conv2d(cur, ConvWeights{l.c_out, l.c_in, l.kernel, w, {}}, l.stride);
    case LayerKind::depthwise_separable:
      return depthwise_separable(cur, DepthwiseWeights{l.c_in, l.kernel, w},
                                 PointwiseWeights{l.c_out, l.c_in, w2}, l.stride);
    case LayerKind::relu:
      for (double& v : cur.values) v = std::max(0.0, v);
      return cur;
    case LayerKind::global_avg_pool:
      return global_avg_pool_of(cur);
    case LayerKind::dense: {
      if (static_cast<int>(cur.size()) != l.f_in)
        throw std::invalid_argument("dense: flattened input size mismatch");
      Tensor3 out(l.f_out, 1, 1);
      for (int o = 0; o < l.f_out; ++o) {
        double acc = b[o];
        for (int in = 0; in < l.f_in; ++in)
          acc += w[static_cast<size_t>(o) * l.f_in + in] * cur.values[in];
        out.values[o] = acc;
      }
      return out;
    }
    case LayerKind::softmax:
      softmax_inplace(cur);
      return cur;
  }
  throw std::logic_error("apply_layer: unknown layer kind");
}

}  // namespace

Tensor3 Network::run(const Tensor3& x, Trace* trace) const {
  Tensor3 cur = x;
  for (size_t i = 0; i < spec_.layers.size(); ++i) {
    if (trace) trace->inputs.push_back(cur);
    try {
      cur = apply_layer(spec_.layers[i], params_[i].w, params_[i].w2, params_[i].b,
                        std::move(cur));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("layer " + std::to_string(i) + ": " + e.what());
    }
  }
  if (trace) trace->output = cur;
  return cur;
}

std::vector<double> Network::forward(const Tensor3& x) const { return run(x, nullptr).values; }

std::vector<double> Network::features(const Tensor3& x) const {
  Tensor3 cur = x;
  std::vector<double> feat;
  for (size_t i = 0; i < spec_.layers.size(); ++i) {
    cur = apply_layer(spec_.layers[i], params_[i].w, params_[i].w2, params_[i].b, std::move(cur));
    if (spec_.layers[i].kind == LayerKind::global_avg_pool) feat = cur.values;
  }
  if (feat.empty()) throw std::invalid_argument("features: net has no global_avg_pool layer");
  return feat;
}

void Network::backward(const Trace& trace, const std::vector<double>& logit_grad,
                       std::vector<LayerParams>& grads) const {
  // logit_grad is d loss / d logits (softmax fused with cross-entropy);
  // walk the remaining layers in reverse.
  const size_t last = spec_.layers.size() - 1;  // softmax index
  Tensor3 g = trace.inputs[last];
  g.values = logit_grad;

  for (size_t ii = last; ii-- > 0;) {
    const LayerSpec& l = spec_.layers[ii];
    const LayerParams& p = params_[ii];
    const Tensor3& x = trace.inputs[ii];
    Tensor3 gin(x.channels, x.height, x.width);

    switch (l.kind) {
      case LayerKind::relu:
        gin = g;
        for (size_t k = 0; k < x.size(); ++k)
          if (x.values[k] <= 0.0) gin.values[k] = 0.0;
        break;
      case LayerKind::global_avg_pool: {
        const double inv = 1.0 / (static_cast<double>(x.height) * x.width);
        for (int c = 0; c < x.channels; ++c) {
          const double gc = g.at(c, 0, 0) * inv;
          for (int y = 0; y < x.height; ++y)
            for (int xx = 0; xx < x.width; ++xx) gin.at(c, y, xx) = gc;
        }
        break;
      }
      case LayerKind::dense: {
        for (int o = 0; o < l.f_out; ++o) {
          const double go = g.values[o];
          grads[ii].b[o] += go;
          for (int in = 0; in < l.f_in; ++in) {
            grads[ii].w[static_cast<size_t>(o) * l.f_in + in] += go * x.values[in];
            gin.values[in] += go * p.w[static_cast<size_t>(o) * l.f_in + in];
          }
        }
        break;
      }
      case LayerKind::standard_conv: {
        const int k = l.kernel, pad = k / 2, s = l.stride;
        for (int co = 0; co < l.c_out; ++co) {
          for (int i = 0; i < g.height; ++i) {
            for (int j = 0; j < g.width; ++j) {
              const double go = g.at(co, i, j);
              if (go == 0.0) continue;
              for (int ci = 0; ci < l.c_in; ++ci) {
                for (int u = 0; u < k; ++u) {
                  const int yy = i * s + u - pad;
                  if (yy < 0 || yy >= x.height) continue;
                  for (int v = 0; v < k; ++v) {
                    const int xx = j * s + v - pad;
                    if (xx < 0 || xx >= x.width) continue;
                    const size_t widx = ((static_cast<size_t>(co) * l.c_in + ci) * k + u) * k + v;
                    grads[ii].w[widx] += go * x.at(ci, yy, xx);
                    gin.at(ci, yy, xx) += go * p.w[widx];
                  }
                }
              }
            }
          }
        }
        break;
      }
      case LayerKind::depthwise_separable: {
        const int k = l.kernel, pad = k / 2, s = l.stride;
        const Tensor3 t = depthwise_only(x, DepthwiseWeights{l.c_in, k, p.w}, s);
        Tensor3 tg(t.channels, t.height, t.width);
        for (int co = 0; co < l.c_out; ++co) {
          for (int i = 0; i < g.height; ++i) {
            for (int j = 0; j < g.width; ++j) {
              const double go = g.at(co, i, j);
              if (go == 0.0) continue;
              for (int ci = 0; ci < l.c_in; ++ci) {
                grads[ii].w2[static_cast<size_t>(co) * l.c_in + ci] += go * t.at(ci, i, j);
                tg.at(ci, i, j) += go * p.w2[static_cast<size_t>(co) * l.c_in + ci];
              }
            }
          }
        }
        for (int c = 0; c < l.c_in; ++c) {
          for (int i = 0; i < tg.height; ++i) {
            for (int j = 0; j < tg.width; ++j) {
              const double gt = tg.at(c, i, j);
              if (gt == 0.0) continue;
              for (int u = 0; u < k; ++u) {
                const int yy = i * s + u - pad;
                if (yy < 0 || yy >= x.height) continue;
                for (int v = 0; v < k; ++v) {
                  const int xx = j * s + v - pad;
                  if (xx < 0 || xx >= x.width) continue;
                  const size_t widx = (static_cast<size_t>(c) * k + u) * k + v;
                  grads[ii].w[widx] += gt * x.at(c, yy, xx);
                  gin.at(c, yy, xx) += gt * p.w[widx];
                }
              }
            }
          }
        }
        break;
      }
      case LayerKind::softmax:
        throw std::logic_error("softmax only valid as the final layer");
    }
    g = std::move(gin);
  }
}

double Network::train_step(const std::vector<Tensor3>& batch, const std::vector<int>& labels,
                           double lr) {
  if (batch.empty() || batch.size() != labels.size())
    throw std::invalid_argument("train_step: batch/label mismatch");
  if (lr < 0.0) throw std::invalid_argument("train_step: negative learning rate");

  std::vector<LayerParams> grads(params_.size());
  for (size_t i = 0; i < params_.size(); ++i) {
    grads[i].w.assign(params_[i].w.size(), 0.0);
    grads[i].w2.assign(params_[i].w2.size(), 0.0);
    grads[i].b.assign(params_[i].b.size(), 0.0);
  }

  double loss = 0.0;
  for (size_t n = 0; n < batch.size(); ++n) {
    Trace trace;
    const Tensor3 probs = run(batch[n], &trace);
    const int label = labels[n];
    if (label < 0 || label >= static_cast<int>(probs.size()))
      throw std::invalid_argument("train_step: label out of range");
    loss -= std::log(probs.values[static_cast<size_t>(label)]);

    std::vector<double> logit_grad = probs.values;
    logit_grad[static_cast<size_t>(label)] -= 1.0;
    backward(trace, logit_grad, grads);
  }
  loss /= static_cast<double>(batch.size());
  if (!std::isfinite(loss)) throw std::runtime_error("train_step: non-finite loss, step aborted");

  const double scale = lr / static_cast<double>(batch.size());
  for (size_t i = 0; i < params_.size(); ++i) {
    for (size_t k = 0; k < params_[i].w.size(); ++k) params_[i].w[k] -= scale * grads[i].w[k];
    for (size_t k = 0; k < params_[i].w2.size(); ++k) params_[i].w2[k] -= scale * grads[i].w2[k];
    for (size_t k = 0; k < params_[i].b.size(); ++k) params_[i].b[k] -= scale * grads[i].b[k];
  }
  return loss;
}

std::vector<double*> Network::parameter_view() {
  std::vector<double*> view;
  for (LayerParams& p : params_) {
    for (double& v : p.w) view.push_back(&v);
    for (double& v : p.w2) view.push_back(&v);
    for (double& v : p.b) view.push_back(&v);
  }
  return view;
}

void Network::save(const std::string& path) const {
  std::string buf = "LFNET1";
  detail::append_u32(buf, static_cast<uint32_t>(spec_.layers.size()));
  for (const LayerSpec& l : spec_.layers) {
    std::string rec;
    rec.push_back(static_cast<char>(l.kind));
    detail::append_i32(rec, l.c_in);
    detail::append_i32(rec, l.c_out);
    detail::append_i32(rec, l.kernel);
    detail::append_i32(rec, l.stride);
    detail::append_i32(rec, l.f_in);
    detail::append_i32(rec, l.f_out);
    detail::append_u32(buf, static_cast<uint32_t>(rec.size()));
    buf += rec;
  }
  uint64_t count = 0;
  for (const LayerParams& p : params_) count += p.w.size() + p.w2.size() + p.b.size();
  detail::append_u64(buf, count);
  for (const LayerParams& p : params_) {
    for (const double v : p.w) detail::append_f64(buf, v);
    for (const double v : p.w2) detail::append_f64(buf, v);
    for (const double v : p.b) detail::append_f64(buf, v);
  }
  detail::spit(path, buf);
}

Network Network::load(const std::string& path) {
  detail::Reader rd(detail::slurp(path), path);
  rd.expect_magic("LFNET1");

  NetSpec spec;
  const uint32_t n_layers = rd.read_u32();
  for (uint32_t i = 0; i < n_layers; ++i) {
    const uint32_t len = rd.read_u32();
    if (len != 25) throw std::runtime_error(path + ": unexpected layer record length");
    LayerSpec l;
    l.kind = static_cast<LayerKind>(rd.read_u8());
    if (static_cast<uint8_t>(l.kind) > static_cast<uint8_t>(LayerKind::softmax))
      throw std::runtime_error(path + ": unknown layer kind");
    l.c_in = rd.read_i32();
    l.c_out = rd.read_i32();
    l.kernel = rd.read_i32();
    l.stride = rd.read_i32();
    l.f_in = rd.read_i32();
    l.f_out = rd.read_i32();
    spec.layers.push_back(l);
  }

  Network net(spec, 0);
  const uint64_t count = rd.read_u64();
  uint64_t expect = 0;
  for (const LayerParams& p : net.params_) expect += p.w.size() + p.w2.size() + p.b.size();
  if (count != expect) throw std::runtime_error(path + ": parameter count mismatch");
  for (LayerParams& p : net.params_) {
    for (double& v : p.w) v = rd.read_f64();
    for (double& v : p.w2) v = rd.read_f64();
    for (double& v : p.b) v = rd.read_f64();
  }
  return net;
}

}  // namespace lumenfix::net
