#include "pkdga/pkdga.h"

#include <cstring>
#include <memory>
#include <mutex>
#include <new>
#include <string>

#include "baselines.hpp"
#include "checkpoint.hpp"
#include "config.hpp"
#include "env.hpp"
#include "errors.hpp"
#include "manifest.hpp"
#include "parallel.hpp"
#include "trainer.hpp"
#include "workflows.hpp"

struct pkdga_config {
  pkdga::Config cfg;
};

struct pkdga_strings {
  std::vector<std::string> items;
};

struct pkdga_policy {
  pkdga::PolicyParams params;
};

struct pkdga_detector {
  std::shared_ptr<const pkdga::DetectorModel> model;
  std::string kind;
};

struct pkdga_env {
  std::unique_ptr<pkdga::DnsEnv> env;
};

namespace {

thread_local std::string last_error;

std::mutex log_mutex;
pkdga_log_fn log_fn = nullptr;
void* log_user = nullptr;

void log_message(const std::string& msg) {
  std::lock_guard lock(log_mutex);
  if (log_fn != nullptr) log_fn(msg.c_str(), log_user);
}

pkdga_status to_status(pkdga::ErrorCode code) { return static_cast<pkdga_status>(code); }

template <typename Fn>
pkdga_status guarded(Fn&& fn) {
  try {
    fn();
    return PKDGA_OK;
  } catch (const pkdga::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return PKDGA_E_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return PKDGA_E_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return PKDGA_E_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  pkdga::require(p != nullptr, pkdga::ErrorCode::kUsage, std::string(what) + " must not be NULL");
}

pkdga::SeedSpace default_space() {
  pkdga::Config defaults;
  return pkdga::SeedSpace(pkdga::parse_date(defaults.get("seed.start")),
                          pkdga::parse_date(defaults.get("seed.end")), pkdga::TokenDict().size());
}

pkdga_strings* make_strings(std::vector<std::string> items) {
  auto* out = new pkdga_strings;
  out->items = std::move(items);
  return out;
}

void copy_out(const std::string& s, char* buf, size_t cap) {
  if (buf == nullptr || cap == 0) return;
  const size_t n = std::min(cap - 1, s.size());
  std::memcpy(buf, s.data(), n);
  buf[n] = '\0';
}

}  // namespace

extern "C" {

const char* pkdga_version(void) { return pkdga::kToolVersion.data(); }

const char* pkdga_status_name(pkdga_status status) {
  switch (status) {
    case PKDGA_OK: return "ok";
    case PKDGA_E_USAGE: return "usage";
    case PKDGA_E_DATA: return "data";
    case PKDGA_E_NUMERIC: return "numeric";
    case PKDGA_E_RANGE: return "range";
    case PKDGA_E_ASSEMBLY: return "assembly";
    case PKDGA_E_CONTRACT: return "contract";
    case PKDGA_E_TRAINING: return "training";
    case PKDGA_E_UNSUPPORTED: return "unsupported";
    case PKDGA_E_BUDGET: return "budget";
    case PKDGA_E_IO: return "io";
    case PKDGA_E_ROUND_FAILURE: return "round-failure";
    case PKDGA_E_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* pkdga_last_error(void) { return last_error.c_str(); }

void pkdga_set_log_callback(pkdga_log_fn fn, void* user) {
  std::lock_guard lock(log_mutex);
  log_fn = fn;
  log_user = user;
}

void pkdga_set_threads(size_t count) { pkdga::set_thread_count(count); }

pkdga_status pkdga_config_new(pkdga_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new pkdga_config;
  });
}

pkdga_status pkdga_config_load(const char* path, pkdga_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    auto cfg = pkdga::Config::load(path);
    *out = new pkdga_config{std::move(cfg)};
  });
}

pkdga_status pkdga_config_set(pkdga_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    need(cfg, "cfg");
    need(key, "key");
    need(value, "value");
    cfg->cfg.set(key, value);
  });
}

pkdga_status pkdga_config_get(const pkdga_config* cfg, const char* key, char* buf, size_t cap,
                              size_t* len) {
  return guarded([&] {
    need(cfg, "cfg");
    need(key, "key");
    const auto v = cfg->cfg.get(key);
    copy_out(v, buf, cap);
    if (len != nullptr) *len = v.size();
  });
}

void pkdga_config_free(pkdga_config* cfg) { delete cfg; }

size_t pkdga_strings_size(const pkdga_strings* list) { return list ? list->items.size() : 0; }

const char* pkdga_strings_at(const pkdga_strings* list, size_t index) {
  if (list == nullptr || index >= list->items.size()) return nullptr;
  return list->items[index].c_str();
}

void pkdga_strings_free(pkdga_strings* list) { delete list; }

int pkdga_validate_domain(const char* name) {
  return name != nullptr && pkdga::validate_domain(name) ? 1 : 0;
}

pkdga_status pkdga_encode_seed(const char* date, const char* start, const char* end,
                               size_t* hot_index, uint64_t* rng_seed) {
  return guarded([&] {
    need(date, "date");
    need(start, "start");
    need(end, "end");
    pkdga::TokenDict dict;
    pkdga::SeedSpace space(pkdga::parse_date(start), pkdga::parse_date(end), dict.size());
    const auto enc = pkdga::encode_seed(pkdga::parse_date(date), dict, space);
    if (hot_index != nullptr) *hot_index = enc.hot_index;
    if (rng_seed != nullptr) *rng_seed = enc.rng_seed;
  });
}

pkdga_status pkdga_generate_baseline(const char* dga, const char* words_path, uint64_t seed,
                                     size_t count, pkdga_strings** out) {
  return guarded([&] {
    need(dga, "dga");
    need(out, "out");
    const auto kind = pkdga::parse_dga(dga);
    pkdga::require(kind != pkdga::DgaKind::kPkdga, pkdga::ErrorCode::kUsage,
                   "use the policy functions for pkdga");
    pkdga::require(kind == pkdga::DgaKind::kKraken || words_path != nullptr, pkdga::ErrorCode::kUsage,
                   "word-based generators need a word list");
    const auto words = words_path ? pkdga::WordDict::load(words_path) : pkdga::WordDict({"unused"});
    *out = make_strings(pkdga::baseline_domains(kind, words, seed, count));
  });
}

pkdga_status pkdga_policy_init(size_t layers, size_t embed_dim, size_t hidden_dim, uint64_t seed,
                               pkdga_policy** out) {
  return guarded([&] {
    need(out, "out");
    pkdga::TokenDict dict;
    const pkdga::PolicyShape shape{layers, embed_dim, hidden_dim, dict.size()};
    *out = new pkdga_policy{pkdga::init_params(shape, dict, seed)};
  });
}

pkdga_status pkdga_policy_load(const char* path, pkdga_policy** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new pkdga_policy{pkdga::load_policy(path)};
  });
}

pkdga_status pkdga_policy_save(const pkdga_policy* policy, const char* path) {
  return guarded([&] {
    need(policy, "policy");
    need(path, "path");
    pkdga::save_policy(path, policy->params);
  });
}

size_t pkdga_policy_parameter_count(const pkdga_policy* policy) {
  return policy ? policy->params.parameter_count() : 0;
}

pkdga_status pkdga_policy_candidates(const pkdga_policy* policy, const char* date, size_t count,
                                     size_t length, pkdga_strings** out) {
  return guarded([&] {
    need(policy, "policy");
    need(date, "date");
    need(out, "out");
    pkdga::require(length >= 1 && length <= pkdga::kMaxEpisodeLength, pkdga::ErrorCode::kUsage,
                   "length outside [1, 24]");
    pkdga::TokenDict dict;
    *out = make_strings(pkdga::pkdga_candidates(policy->params, dict, default_space(),
                                                pkdga::parse_date(date), count, length));
  });
}

void pkdga_policy_free(pkdga_policy* policy) { delete policy; }

pkdga_status pkdga_detector_load(const char* path, pkdga_detector** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    auto model = std::make_shared<pkdga::DetectorModel>(pkdga::load_detector(path));
    auto kind = pkdga::detector_name(model->spec());
    *out = new pkdga_detector{std::move(model), std::move(kind)};
  });
}

pkdga_status pkdga_detector_save(const pkdga_detector* det, const char* path) {
  return guarded([&] {
    need(det, "det");
    need(path, "path");
    pkdga::save_detector(path, *det->model);
  });
}

pkdga_status pkdga_detector_score(const pkdga_detector* det, const char* name, double* score) {
  return guarded([&] {
    need(det, "det");
    need(name, "name");
    need(score, "score");
    *score = det->model->score(name);
  });
}

const char* pkdga_detector_kind(const pkdga_detector* det) {
  return det ? det->kind.c_str() : nullptr;
}

void pkdga_detector_free(pkdga_detector* det) { delete det; }

pkdga_status pkdga_env_new(const pkdga_detector* det, const char* benign_path,
                           uint64_t query_budget, pkdga_env** out) {
  return guarded([&] {
    need(det, "det");
    need(out, "out");
    std::vector<std::string> benign;
    if (benign_path != nullptr) benign = pkdga::read_lines(benign_path);
    pkdga::DnsEnvConfig cfg;
    cfg.query_budget = query_budget;
    *out = new pkdga_env{std::make_unique<pkdga::DnsEnv>(det->model, benign, cfg)};
  });
}

pkdga_status pkdga_env_register(pkdga_env* env, const char* fqdn, int* outcome, int* d_factor,
                                int* n_factor) {
  return guarded([&] {
    need(env, "env");
    need(fqdn, "fqdn");
    const auto fb = env->env->register_domain(fqdn);
    if (outcome != nullptr) *outcome = fb.outcome;
    if (d_factor != nullptr) *d_factor = fb.d_factor;
    if (n_factor != nullptr) *n_factor = fb.n_factor;
  });
}

pkdga_status pkdga_env_resolve(const pkdga_env* env, const char* fqdn, char* buf, size_t cap,
                               int* found) {
  return guarded([&] {
    need(env, "env");
    need(fqdn, "fqdn");
    const auto addr = env->env->resolve(fqdn);
    if (found != nullptr) *found = addr ? 1 : 0;
    copy_out(addr.value_or(""), buf, cap);
  });
}

uint64_t pkdga_env_query_count(const pkdga_env* env) { return env ? env->env->query_count() : 0; }

void pkdga_env_free(pkdga_env* env) { delete env; }

#define PKDGA_WORKFLOW(name, fn)                                          \
  pkdga_status name(const pkdga_config* cfg, const char* out_dir) {       \
    return guarded([&] {                                                  \
      need(cfg, "cfg");                                                   \
      need(out_dir, "out_dir");                                           \
      pkdga::fn(cfg->cfg, out_dir, log_message);                          \
    });                                                                   \
  }

PKDGA_WORKFLOW(pkdga_run_prep, run_prep)
PKDGA_WORKFLOW(pkdga_run_detector_train, run_detector_train)
PKDGA_WORKFLOW(pkdga_run_train, run_train)
PKDGA_WORKFLOW(pkdga_run_eval, run_eval)
PKDGA_WORKFLOW(pkdga_run_matrix, run_matrix_workflow)
PKDGA_WORKFLOW(pkdga_run_game, run_game)
PKDGA_WORKFLOW(pkdga_run_bench, run_bench)

#undef PKDGA_WORKFLOW

pkdga_status pkdga_run_generate(const pkdga_config* cfg, const char* dga, size_t count,
                                pkdga_strings** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(dga, "dga");
    need(out, "out");
    *out = make_strings(pkdga::run_generate(cfg->cfg, dga, count));
  });
}

}  // extern "C"
