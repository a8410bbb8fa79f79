#pragma once

// Closed-world feedback environments for trainer tests.

#include <functional>
#include <mutex>
#include <string>
#include <unordered_set>

#include "env.hpp"

namespace pkdga::test {

// Rewards a name iff the predicate accepts its second-level label. With
// `novelty` set, a name is accepted at most once.
class PredicateEnv final : public FeedbackEnv {
 public:
  explicit PredicateEnv(std::function<bool(std::string_view)> accept, bool novelty = false)
      : accept_(std::move(accept)), novelty_(novelty) {}

  DnsFeedback register_domain(std::string_view fqdn) override {
    std::lock_guard lock(mu_);
    DnsFeedback fb;
    fb.d_factor = accept_(registrable_label(fqdn)) ? 1 : 0;
    fb.n_factor = novelty_ && taken_.contains(std::string(fqdn)) ? 0 : 1;
    fb.outcome = fb.d_factor * fb.n_factor;
    if (fb.outcome == 1 && novelty_) taken_.insert(std::string(fqdn));
    fb.query_count = ++queries_;
    return fb;
  }
  std::optional<std::string> resolve(std::string_view fqdn) const override {
    std::lock_guard lock(mu_);
    if (taken_.contains(std::string(fqdn))) return "10.0.0.1";
    return std::nullopt;
  }
  std::uint64_t query_count() const override {
    std::lock_guard lock(mu_);
    return queries_;
  }

 private:
  std::function<bool(std::string_view)> accept_;
  bool novelty_;
  mutable std::mutex mu_;
  std::unordered_set<std::string> taken_;
  std::uint64_t queries_ = 0;
};

}  // namespace pkdga::test
