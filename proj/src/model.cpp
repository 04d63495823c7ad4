#include "vrplab/model.hpp"

#include <stdexcept>

#include "vrplab/instance.hpp"

namespace vrplab {

model_config preset_config(const std::string& name) {
  model_config c;
  c.preset = name;
  c.tw_input = true;
  c.spectral_norm = true;
  if (name == "1M") {
    c.layers = 6;
    c.heads = 8;
    c.kv_dim = 16;
    c.ffn_mult = 8.0 / 3.0;
  } else if (name == "5M") {
    c.layers = 12;
    c.heads = 16;
    c.kv_dim = 16;
    c.ffn_mult = 0.625;
  } else if (name == "40M") {
    c.layers = 12;
    c.heads = 16;
    c.kv_dim = 32;
    c.ffn_mult = 8.0 / 3.0;
  } else if (name == "1B") {
    c.layers = 20;
    c.heads = 16;
    c.kv_dim = 128;
    c.ffn_mult = 3.0;
  } else {
    throw std::invalid_argument("unknown preset: " + name);
  }
  return c;
}

std::int64_t param_count(const model_config& cfg) {
  const std::int64_t dh = cfg.hidden();
  const std::int64_t dff = cfg.ffn_dim();
  const std::int64_t per_layer = 4 * dh * dh    // Wq Wk Wv Wo
                                 + 3 * dh * dff  // SwiGLU W1 W2 W3
                                 + 2 * dh;       // two RMSNorm gains
  return cfg.input_dim() * dh + cfg.layers * per_layer +
         (dh + 5) * dh    // context projection W_c
         + 4 * dh * dh;   // decoder attention
}

double flops_estimate(const model_config& cfg, int scale, int m, bool aug) {
  const double n = scale + 1;
  const double dh = cfg.hidden();
  const double dff = cfg.ffn_dim();
  const double encoder = n * cfg.input_dim() * dh +
                         cfg.layers * (4.0 * n * dh * dh + 2.0 * n * n * dh +
                                       3.0 * n * dh * dff);
  const double kv = 2.0 * n * dh * dh;
  const double per_step = (dh + 5.0) * dh  // context projection
                          + 2.0 * dh * dh  // decoder q and output projections
                          + 3.0 * n * dh;  // scores, weighted sum, logits
  const int cap = vehicle_capacity(scale);
  const double routes = static_cast<double>((5 * scale + cap - 1) / cap);
  const double steps = scale + routes;
  const double macs = encoder + kv + m * steps * per_step;
  return 2.0 * (aug ? 8.0 : 1.0) * macs / 1e9;
}

}  // namespace vrplab
