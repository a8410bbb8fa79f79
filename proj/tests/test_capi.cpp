#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <random>
#include <string>

#include "pkdga/pkdga.h"

namespace {

class ScratchDir {
 public:
  ScratchDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("pkdga_capi_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string operator/(const char* name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

pkdga_config* small_config() {
  pkdga_config* cfg = nullptr;
  EXPECT_EQ(pkdga_config_new(&cfg), PKDGA_OK);
  EXPECT_EQ(pkdga_config_set(cfg, "data.dir", PKDGA_TEST_DATA_DIR), PKDGA_OK);
  EXPECT_EQ(pkdga_config_set(cfg, "detector.samples", "200"), PKDGA_OK);
  EXPECT_EQ(pkdga_config_set(cfg, "detector.epochs", "1"), PKDGA_OK);
  return cfg;
}

TEST(CApi, VersionAndStatusNames) {
  EXPECT_STREQ(pkdga_version(), "1.0.0");
  EXPECT_STREQ(pkdga_status_name(PKDGA_OK), "ok");
  EXPECT_STRNE(pkdga_status_name(PKDGA_E_BUDGET), pkdga_status_name(PKDGA_E_DATA));
}

TEST(CApi, ConfigErrorsSetLastError) {
  pkdga_config* cfg = nullptr;
  ASSERT_EQ(pkdga_config_new(&cfg), PKDGA_OK);
  EXPECT_EQ(pkdga_config_set(cfg, "no.such.key", "1"), PKDGA_E_USAGE);
  EXPECT_NE(std::strstr(pkdga_last_error(), "no.such.key"), nullptr);
  char buf[8];
  size_t len = 0;
  ASSERT_EQ(pkdga_config_get(cfg, "bench.batches", buf, sizeof buf, &len), PKDGA_OK);
  EXPECT_EQ(len, std::strlen("1,8,16,32,64,128"));
  EXPECT_STREQ(buf, "1,8,16,");
  EXPECT_EQ(pkdga_config_load("/nonexistent.cfg", &cfg), PKDGA_E_USAGE);
  pkdga_config_free(cfg);
  EXPECT_EQ(pkdga_config_new(nullptr), PKDGA_E_USAGE);
}

TEST(CApi, DomainHelpers) {
  EXPECT_EQ(pkdga_validate_domain("abc.com"), 1);
  EXPECT_EQ(pkdga_validate_domain("-abc.com"), 0);
  EXPECT_EQ(pkdga_validate_domain(nullptr), 0);
  size_t hot = 0;
  uint64_t seed = 0;
  ASSERT_EQ(pkdga_encode_seed("1970-01-02", "1970-01-01", "1970-12-31", &hot, &seed), PKDGA_OK);
  EXPECT_EQ(hot, 1u);
  EXPECT_EQ(seed, 1u);
  EXPECT_EQ(pkdga_encode_seed("1971-01-01", "1970-01-01", "1970-12-31", &hot, &seed), PKDGA_E_RANGE);
}

TEST(CApi, BaselineGeneration) {
  pkdga_strings* list = nullptr;
  ASSERT_EQ(pkdga_generate_baseline("kraken", nullptr, 7, 10, &list), PKDGA_OK);
  ASSERT_EQ(pkdga_strings_size(list), 10u);
  for (size_t i = 0; i < 10; ++i) EXPECT_EQ(pkdga_validate_domain(pkdga_strings_at(list, i)), 1);
  EXPECT_EQ(pkdga_strings_at(list, 10), nullptr);
  pkdga_strings_free(list);
  const std::string words = std::string(PKDGA_TEST_DATA_DIR) + "/words.txt";
  ASSERT_EQ(pkdga_generate_baseline("suppobox", words.c_str(), 7, 3, &list), PKDGA_OK);
  pkdga_strings_free(list);
  EXPECT_EQ(pkdga_generate_baseline("conficker", nullptr, 7, 3, &list), PKDGA_E_USAGE);
}

TEST(CApi, PolicyLifecycle) {
  ScratchDir dir;
  pkdga_policy* p = nullptr;
  ASSERT_EQ(pkdga_policy_init(1, 32, 64, 3, &p), PKDGA_OK);
  EXPECT_EQ(pkdga_policy_parameter_count(p), 28453u);
  const auto path = dir / "p.ckpt";
  ASSERT_EQ(pkdga_policy_save(p, path.c_str()), PKDGA_OK);
  pkdga_policy* q = nullptr;
  ASSERT_EQ(pkdga_policy_load(path.c_str(), &q), PKDGA_OK);
  pkdga_strings *a = nullptr, *b = nullptr;
  ASSERT_EQ(pkdga_policy_candidates(p, "2022-02-02", 5, 12, &a), PKDGA_OK);
  ASSERT_EQ(pkdga_policy_candidates(q, "2022-02-02", 5, 12, &b), PKDGA_OK);
  for (size_t i = 0; i < 5; ++i) EXPECT_STREQ(pkdga_strings_at(a, i), pkdga_strings_at(b, i));
  pkdga_strings_free(a);
  pkdga_strings_free(b);
  EXPECT_EQ(pkdga_policy_candidates(p, "not-a-date", 5, 12, &a), PKDGA_E_DATA);
  EXPECT_EQ(pkdga_policy_load((dir / "missing.ckpt").c_str(), &q), PKDGA_E_IO);
  pkdga_policy_free(p);
  pkdga_policy_free(q);
}

TEST(CApi, DetectorAndEnvironment) {
  ScratchDir dir;
  pkdga_config* cfg = small_config();
  const auto out = dir / "det";
  ASSERT_EQ(pkdga_run_detector_train(cfg, out.c_str()), PKDGA_OK) << pkdga_last_error();
  pkdga_detector* det = nullptr;
  ASSERT_EQ(pkdga_detector_load((out + "/detector.ckpt").c_str(), &det), PKDGA_OK);
  EXPECT_STREQ(pkdga_detector_kind(det), "lstm");
  double score = -1.0;
  ASSERT_EQ(pkdga_detector_score(det, "google.com", &score), PKDGA_OK);
  EXPECT_GE(score, 0.0);
  EXPECT_LE(score, 1.0);
  EXPECT_EQ(pkdga_detector_score(det, "bad_name", &score), PKDGA_E_DATA);

  const std::string benign = std::string(PKDGA_TEST_DATA_DIR) + "/benign_domains.txt";
  pkdga_env* env = nullptr;
  ASSERT_EQ(pkdga_env_new(det, benign.c_str(), 2, &env), PKDGA_OK);
  int outcome = -1, d = -1, n = -1;
  ASSERT_EQ(pkdga_env_register(env, "google.com", &outcome, &d, &n), PKDGA_OK);
  EXPECT_EQ(outcome, 0);
  EXPECT_EQ(n, 0);
  EXPECT_EQ(outcome, d * n);
  ASSERT_EQ(pkdga_env_register(env, "bad_name", &outcome, &d, &n), PKDGA_E_DATA);
  EXPECT_EQ(pkdga_env_query_count(env), 1u);
  ASSERT_EQ(pkdga_env_register(env, "zzqxkvwj.com", &outcome, &d, &n), PKDGA_OK);
  char addr[32];
  int found = -1;
  ASSERT_EQ(pkdga_env_resolve(env, "zzqxkvwj.com", addr, sizeof addr, &found), PKDGA_OK);
  EXPECT_EQ(found, outcome);
  EXPECT_EQ(pkdga_env_register(env, "another.com", &outcome, &d, &n), PKDGA_E_BUDGET);
  pkdga_env_free(env);
  pkdga_detector_free(det);
  pkdga_config_free(cfg);
}

TEST(CApi, GenerateWorkflowAndLogCallback) {
  pkdga_config* cfg = small_config();
  ASSERT_EQ(pkdga_config_set(cfg, "run.seed", "7"), PKDGA_OK);
  pkdga_strings *a = nullptr, *b = nullptr;
  ASSERT_EQ(pkdga_run_generate(cfg, "gozi", 4, &a), PKDGA_OK);
  ASSERT_EQ(pkdga_run_generate(cfg, "gozi", 4, &b), PKDGA_OK);
  for (size_t i = 0; i < 4; ++i) EXPECT_STREQ(pkdga_strings_at(a, i), pkdga_strings_at(b, i));
  pkdga_strings_free(a);
  pkdga_strings_free(b);
  EXPECT_EQ(pkdga_run_generate(cfg, "pkdga", 4, &a), PKDGA_E_USAGE);

  ScratchDir dir;
  int lines = 0;
  pkdga_set_log_callback([](const char*, void* user) { ++*static_cast<int*>(user); }, &lines);
  const auto out = dir / "det";
  ASSERT_EQ(pkdga_run_detector_train(cfg, out.c_str()), PKDGA_OK);
  pkdga_set_log_callback(nullptr, nullptr);
  EXPECT_GT(lines, 0);
  pkdga_config_free(cfg);
}

}  // namespace
