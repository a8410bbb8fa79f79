#pragma once

// Simulated registration feedback. The generator only ever sees
// DNS(Y) = D(Y) * N(Y): whether the detector let the name through and
// whether the name was still free.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "detectors.hpp"
#include "domain.hpp"

namespace pkdga {

inline constexpr std::uint64_t kDefaultQueryBudget = 1'000'000;

struct DnsFeedback {
  std::uint8_t outcome = 0;
  std::uint8_t d_factor = 0;
  std::uint8_t n_factor = 0;
  std::uint64_t query_count = 0;  // value after this call
};

// Black-box boundary handed to the trainer.
class FeedbackEnv {
 public:
  virtual ~FeedbackEnv() = default;

  virtual DnsFeedback register_domain(std::string_view fqdn) = 0;
  virtual std::optional<std::string> resolve(std::string_view fqdn) const = 0;
  virtual std::uint64_t query_count() const = 0;

  // Same results as calling register_domain on each name in index order.
  virtual std::vector<DnsFeedback> register_batch(std::span<const std::string> fqdns);
};

// Set of taken names. Membership is exact after lowercasing; insert-once.
class Registry {
 public:
  // Returns false when the name was already present.
  bool insert(std::string name, std::string address);
  bool contains(std::string_view name) const;
  std::optional<std::string> address_of(std::string_view name) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::unordered_map<std::string, std::string> entries_;
};

struct DnsEnvConfig {
  std::optional<double> threshold;  // overrides the detector's own
  std::uint64_t query_budget = kDefaultQueryBudget;
  std::filesystem::path audit_log;  // empty disables the audit trail
};

// Detector-gated registrar. Concurrent register calls serialize on one lock.
class DnsEnv final : public FeedbackEnv {
 public:
  DnsEnv(std::shared_ptr<const DetectorModel> detector, std::span<const std::string> benign_seed,
         DnsEnvConfig cfg = {});

  // Throws kData for an invalid name (no counter increment) and kBudget once
  // the query budget is exhausted.
  DnsFeedback register_domain(std::string_view fqdn) override;
  std::optional<std::string> resolve(std::string_view fqdn) const override;
  std::uint64_t query_count() const override { return queries_.load(); }
  std::vector<DnsFeedback> register_batch(std::span<const std::string> fqdns) override;

  std::size_t registry_size() const;

 private:
  DnsFeedback apply(const std::string& name, bool legitimate);
  bool legitimate(std::string_view name) const;

  std::shared_ptr<const DetectorModel> detector_;
  double threshold_;
  std::uint64_t budget_;
  mutable std::mutex mutex_;
  Registry registry_;
  std::uint64_t registrations_ = 0;
  std::atomic<std::uint64_t> queries_{0};
  std::ofstream audit_;
};

// White-box access to the detector score, used only by the shaped-reward
// ablation. Deliberately not part of FeedbackEnv.
class DetectorScorer {
 public:
  explicit DetectorScorer(std::shared_ptr<const DetectorModel> detector)
      : detector_(std::move(detector)) {}
  double score(std::string_view fqdn) const { return detector_->score(fqdn); }

 private:
  std::shared_ptr<const DetectorModel> detector_;
};

// Produces the ordered candidate list for a date. C&C side and bot side
// call it independently and must get identical lists.
using CandidateGenerator = std::function<std::vector<std::string>(const Date&, std::size_t)>;

struct FluxResult {
  std::string registered;
  std::size_t registration_attempts = 0;
  std::size_t resolution_attempts = 0;
};

// The C&C side registers the first candidate that goes through; the bot
// side resolves its own copy of the list until it hits. Throws
// kRoundFailure when every candidate is rejected.
FluxResult fluxing_round(FeedbackEnv& env, const CandidateGenerator& generator, std::size_t k,
                         const Date& date);

}  // namespace pkdga
