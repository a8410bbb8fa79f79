#include "env.hpp"

#include <algorithm>
#include <chrono>

#include "errors.hpp"
#include "parallel.hpp"

namespace pkdga {

namespace {

std::string normalize(std::string_view name) {
  std::string out(name);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string synthetic_address(std::uint64_t ordinal) {
  return "10." + std::to_string((ordinal >> 16) & 0xff) + "." + std::to_string((ordinal >> 8) & 0xff) +
         "." + std::to_string(ordinal & 0xff);
}

std::string timestamp() {
  const auto now = std::chrono::floor<std::chrono::milliseconds>(std::chrono::system_clock::now());
  const auto days = std::chrono::floor<std::chrono::days>(now);
  const std::chrono::hh_mm_ss tod(now - days);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02d.%03dZ", format_date(Date(days)).c_str(),
                static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                static_cast<int>(tod.seconds().count()),
                static_cast<int>(tod.subseconds().count()));
  return buf;
}

}  // namespace

std::vector<DnsFeedback> FeedbackEnv::register_batch(std::span<const std::string> fqdns) {
  std::vector<DnsFeedback> out;
  out.reserve(fqdns.size());
  for (const auto& f : fqdns) out.push_back(register_domain(f));
  return out;
}

bool Registry::insert(std::string name, std::string address) {
  return entries_.emplace(normalize(name), std::move(address)).second;
}

bool Registry::contains(std::string_view name) const {
  return entries_.contains(normalize(name));
}

std::optional<std::string> Registry::address_of(std::string_view name) const {
  const auto it = entries_.find(normalize(name));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

DnsEnv::DnsEnv(std::shared_ptr<const DetectorModel> detector,
               std::span<const std::string> benign_seed, DnsEnvConfig cfg)
    : detector_(std::move(detector)), budget_(cfg.query_budget) {
  require(detector_ != nullptr, ErrorCode::kContract, "environment needs a detector");
  threshold_ = cfg.threshold.value_or(detector_->threshold());
  require(threshold_ >= 0.0 && threshold_ <= 1.0, ErrorCode::kRange, "threshold outside [0, 1]");
  // Pre-existing popular names count as taken; they resolve nowhere we control.
  for (const auto& d : benign_seed) registry_.insert(d, "");
  if (!cfg.audit_log.empty()) {
    audit_.open(cfg.audit_log, std::ios::app);
    require(audit_.good(), ErrorCode::kIo, "cannot open audit log " + cfg.audit_log.string());
  }
}

bool DnsEnv::legitimate(std::string_view name) const {
  return detector_->score(name) >= threshold_;
}

DnsFeedback DnsEnv::apply(const std::string& name, bool legit) {
  require(queries_.load() < budget_, ErrorCode::kBudget, "registration query budget exhausted");
  DnsFeedback fb;
  fb.d_factor = legit ? 1 : 0;
  fb.n_factor = registry_.contains(name) ? 0 : 1;
  fb.outcome = static_cast<std::uint8_t>(fb.d_factor * fb.n_factor);
  if (fb.outcome == 1) registry_.insert(name, synthetic_address(++registrations_));
  fb.query_count = ++queries_;
  require(fb.outcome == fb.d_factor * fb.n_factor, ErrorCode::kContract, "feedback product broken");
  if (audit_.is_open()) {
    audit_ << timestamp() << '\t' << name << '\t' << int{fb.d_factor} << '\t' << int{fb.n_factor}
           << '\t' << int{fb.outcome} << '\n';
  }
  return fb;
}

DnsFeedback DnsEnv::register_domain(std::string_view fqdn) {
  const std::string name = normalize(fqdn);
  require(validate_domain(name), ErrorCode::kData, "invalid domain '" + name + "'");
  const bool legit = legitimate(name);
  std::lock_guard lock(mutex_);
  return apply(name, legit);
}

std::vector<DnsFeedback> DnsEnv::register_batch(std::span<const std::string> fqdns) {
  std::vector<std::string> names(fqdns.size());
  for (std::size_t i = 0; i < fqdns.size(); ++i) {
    names[i] = normalize(fqdns[i]);
    require(validate_domain(names[i]), ErrorCode::kData, "invalid domain '" + names[i] + "'");
  }
  // Scoring is pure and runs in parallel; registry updates stay in order.
  std::vector<std::uint8_t> legit(names.size());
  parallel_for(names.size(), [&](std::size_t i) { legit[i] = legitimate(names[i]) ? 1 : 0; });
  std::vector<DnsFeedback> out;
  out.reserve(names.size());
  std::lock_guard lock(mutex_);
  for (std::size_t i = 0; i < names.size(); ++i) out.push_back(apply(names[i], legit[i] != 0));
  return out;
}

std::optional<std::string> DnsEnv::resolve(std::string_view fqdn) const {
  std::lock_guard lock(mutex_);
  auto addr = registry_.address_of(fqdn);
  if (addr && addr->empty()) return std::nullopt;  // seeded name, not ours
  return addr;
}

std::size_t DnsEnv::registry_size() const {
  std::lock_guard lock(mutex_);
  return registry_.size();
}

FluxResult fluxing_round(FeedbackEnv& env, const CandidateGenerator& generator, std::size_t k,
                         const Date& date) {
  require(k >= 1, ErrorCode::kUsage, "candidate count must be positive");
  FluxResult result;
  const auto cc_list = generator(date, k);
  for (const auto& candidate : cc_list) {
    ++result.registration_attempts;
    if (env.register_domain(candidate).outcome == 1) {
      result.registered = candidate;
      break;
    }
  }
  require(!result.registered.empty(), ErrorCode::kRoundFailure,
          "all " + std::to_string(k) + " candidates were rejected");
  const auto bot_list = generator(date, k);
  for (const auto& candidate : bot_list) {
    ++result.resolution_attempts;
    if (env.resolve(candidate)) break;
  }
  return result;
}

}  // namespace pkdga
