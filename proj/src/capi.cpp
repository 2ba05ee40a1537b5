// Copyright 2026 The EEGTCAV Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "eegtcav.h"

#include <cstring>
#include <ostream>
#include <streambuf>
#include <string>

#include "common.hpp"
#include "config.hpp"
#include "model.hpp"
#include "pipeline.hpp"
#include "stats.hpp"
#include "window.hpp"

namespace {

thread_local std::string g_last_error;

eegtcav_status status_of(eegtcav::ErrorKind kind) {
  switch (kind) {
    case eegtcav::ErrorKind::Config: return EEGTCAV_CONFIG;
    case eegtcav::ErrorKind::Data: return EEGTCAV_DATA;
    case eegtcav::ErrorKind::Numeric: return EEGTCAV_NUMERIC;
  }
  return EEGTCAV_NUMERIC;
}

template <typename Fn>
eegtcav_status guarded(Fn&& fn) noexcept {
  try {
    fn();
    return EEGTCAV_OK;
  } catch (const eegtcav::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::exception& e) {
    g_last_error = std::string("internal: ") + e.what();
    return EEGTCAV_NUMERIC;
  } catch (...) {
    g_last_error = "internal: unknown exception";
    return EEGTCAV_NUMERIC;
  }
}

eegtcav_status invalid_argument(const char* msg) {
  g_last_error = msg;
  return EEGTCAV_CONFIG;
}

// Streams pipeline log output to the caller's callback one line at a time.
class LineCallbackBuf : public std::streambuf {
 public:
  LineCallbackBuf(eegtcav_log_fn fn, void* user) : fn_(fn), user_(user) {}
  ~LineCallbackBuf() override { flush_partial(); }

 protected:
  int overflow(int ch) override {
    if (ch == traits_type::eof()) return 0;
    if (ch == '\n') {
      if (fn_) fn_(line_.c_str(), user_);
      line_.clear();
    } else {
      line_ += static_cast<char>(ch);
    }
    return ch;
  }

 private:
  void flush_partial() {
    if (fn_ && !line_.empty()) fn_(line_.c_str(), user_);
  }

  eegtcav_log_fn fn_;
  void* user_;
  std::string line_;
};

eegtcav::pipeline::RunOverrides overrides_of(const eegtcav_run_options* options) {
  eegtcav::pipeline::RunOverrides ov;
  if (options) {
    if (options->has_seed) ov.seed = options->seed;
    if (options->threads > 0) ov.threads = options->threads;
    ov.no_timestamp = options->no_timestamp != 0;
  }
  return ov;
}

using Command = void (*)(const eegtcav::config::Ini&, const eegtcav::pipeline::RunOverrides&,
                         std::ostream&);

eegtcav_status run_command(Command cmd, const eegtcav_config* cfg,
                           const eegtcav_run_options* options, eegtcav_log_fn log, void* user);

}  // namespace

struct eegtcav_config {
  eegtcav::config::Ini ini;
};

struct eegtcav_model {
  eegtcav::model::LhbModel model;
};

namespace {

eegtcav_status run_command(Command cmd, const eegtcav_config* cfg,
                           const eegtcav_run_options* options, eegtcav_log_fn log, void* user) {
  if (!cfg) return invalid_argument("null config handle");
  return guarded([&] {
    LineCallbackBuf buf(log, user);
    std::ostream out(&buf);
    cmd(cfg->ini, overrides_of(options), out);
  });
}

}  // namespace

extern "C" {

const char* eegtcav_version(void) { return "0.1.0"; }

const char* eegtcav_last_error(void) { return g_last_error.c_str(); }

eegtcav_status eegtcav_config_load(const char* path, eegtcav_config** out) {
  if (!path || !out) return invalid_argument("null argument to eegtcav_config_load");
  *out = nullptr;
  return guarded([&] { *out = new eegtcav_config{eegtcav::config::Ini::load(path)}; });
}

eegtcav_status eegtcav_config_parse(const char* text, eegtcav_config** out) {
  if (!text || !out) return invalid_argument("null argument to eegtcav_config_parse");
  *out = nullptr;
  return guarded([&] { *out = new eegtcav_config{eegtcav::config::Ini::parse(text)}; });
}

void eegtcav_config_free(eegtcav_config* cfg) { delete cfg; }

eegtcav_status eegtcav_run_preprocess(const eegtcav_config* cfg,
                                      const eegtcav_run_options* options, eegtcav_log_fn log,
                                      void* user) {
  return run_command(&eegtcav::pipeline::cmd_preprocess, cfg, options, log, user);
}

eegtcav_status eegtcav_run_build_concepts(const eegtcav_config* cfg,
                                          const eegtcav_run_options* options, eegtcav_log_fn log,
                                          void* user) {
  return run_command(&eegtcav::pipeline::cmd_build_concepts, cfg, options, log, user);
}

eegtcav_status eegtcav_run_finetune(const eegtcav_config* cfg,
                                    const eegtcav_run_options* options, eegtcav_log_fn log,
                                    void* user) {
  return run_command(&eegtcav::pipeline::cmd_finetune, cfg, options, log, user);
}

eegtcav_status eegtcav_run_tcav(const eegtcav_config* cfg, const eegtcav_run_options* options,
                                eegtcav_log_fn log, void* user) {
  return run_command(&eegtcav::pipeline::cmd_tcav, cfg, options, log, user);
}

eegtcav_status eegtcav_run_report(const eegtcav_config* cfg, const eegtcav_run_options* options,
                                  eegtcav_log_fn log, void* user) {
  return run_command(&eegtcav::pipeline::cmd_report, cfg, options, log, user);
}

eegtcav_status eegtcav_model_load(const char* path, eegtcav_model** out) {
  if (!path || !out) return invalid_argument("null argument to eegtcav_model_load");
  *out = nullptr;
  return guarded([&] { *out = new eegtcav_model{eegtcav::model::load_model(path)}; });
}

void eegtcav_model_free(eegtcav_model* model) { delete model; }

eegtcav_status eegtcav_model_num_classes(const eegtcav_model* model, int* out) {
  if (!model || !out) return invalid_argument("null argument to eegtcav_model_num_classes");
  *out = model->model.config().num_classes;
  return EEGTCAV_OK;
}

eegtcav_status eegtcav_model_activation_dim(const eegtcav_model* model, int bottleneck,
                                            int input_len, int* out) {
  if (!model || !out) return invalid_argument("null argument to eegtcav_model_activation_dim");
  if (bottleneck < 0 || bottleneck > 4) return invalid_argument("bottleneck index out of range");
  return guarded([&] {
    *out = model->model.activation_dim(static_cast<eegtcav::model::Bottleneck>(bottleneck),
                                       input_len);
  });
}

eegtcav_status eegtcav_model_logits(const eegtcav_model* model, const float* window,
                                    int channels, int samples, float* logits, int logits_cap) {
  if (!model || !window || !logits) {
    return invalid_argument("null argument to eegtcav_model_logits");
  }
  if (channels <= 0 || samples <= 0) return invalid_argument("non-positive window shape");
  if (logits_cap < model->model.config().num_classes) {
    return invalid_argument("logits buffer too small");
  }
  return guarded([&] {
    Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        mapped(window, channels, samples);
    const Eigen::VectorXf out = model->model.logits(Eigen::MatrixXf(mapped));
    std::memcpy(logits, out.data(), sizeof(float) * static_cast<std::size_t>(out.size()));
  });
}

eegtcav_status eegtcav_windows_info(const char* path, uint32_t* num_windows,
                                    uint32_t* num_channels, uint32_t* num_samples) {
  if (!path || !num_windows || !num_channels || !num_samples) {
    return invalid_argument("null argument to eegtcav_windows_info");
  }
  return guarded([&] {
    const eegtcav::WindowSet set = eegtcav::read_windows(path);
    *num_windows = static_cast<uint32_t>(set.size());
    *num_channels = static_cast<uint32_t>(eegtcav::kWindowChannels);
    *num_samples =
        set.windows.empty() ? 0u : static_cast<uint32_t>(set.windows.front().num_samples());
  });
}

eegtcav_status eegtcav_mann_whitney_p(const double* a, size_t n_a, const double* b, size_t n_b,
                                      double* p_two_sided) {
  if (!a || !b || !p_two_sided) return invalid_argument("null argument to eegtcav_mann_whitney_p");
  return guarded([&] {
    const std::vector<double> va(a, a + n_a);
    const std::vector<double> vb(b, b + n_b);
    *p_two_sided = eegtcav::stats::mann_whitney_u(va, vb).p_two_sided;
  });
}

eegtcav_status eegtcav_bonferroni(double p, int m, double* corrected) {
  if (!corrected) return invalid_argument("null argument to eegtcav_bonferroni");
  return guarded([&] { *corrected = eegtcav::stats::bonferroni(p, m); });
}

}  // extern "C"
