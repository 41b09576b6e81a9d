#include <doctest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "mcn/errors.hpp"
#include "mcn/moments.hpp"
#include "mcn/rng.hpp"

TEST_CASE("candidate counts for known sizes") {
  CHECK(mcn::enumerate_candidates(6).size() == 21);
  CHECK(mcn::enumerate_candidates(5).size() == 15);
  const mcn::CandidateSet one = mcn::enumerate_candidates(1);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == mcn::Span{0, 0});
}

TEST_CASE("candidate count matches the closed form up to 64 segments") {
  for (int n = 1; n <= 64; ++n) {
    // Independent brute force: count every (s, e) pair with s <= e.
    int count = 0;
    for (int s = 0; s < n; ++s)
      for (int e = s; e < n; ++e) ++count;
    const mcn::CandidateSet spans = mcn::enumerate_candidates(n);
    CHECK(static_cast<int>(spans.size()) == count);
    CHECK(count == n * (n + 1) / 2);
  }
}

TEST_CASE("candidates are complete, unique, and ordered") {
  const mcn::CandidateSet spans = mcn::enumerate_candidates(6);
  std::set<std::pair<int, int>> seen;
  for (const mcn::Span s : spans) {
    CHECK(s.start >= 0);
    CHECK(s.start <= s.end);
    CHECK(s.end < 6);
    seen.insert({s.start, s.end});
  }
  CHECK(seen.size() == spans.size());
  CHECK(std::is_sorted(spans.begin(), spans.end()));
}

TEST_CASE("zero segments is an error") {
  CHECK_THROWS_AS((void)mcn::enumerate_candidates(0), mcn::DataError);
  CHECK_THROWS_AS((void)mcn::enumerate_candidates(-3), mcn::DataError);
}

TEST_CASE("iou hand values") {
  CHECK(mcn::temporal_iou({3, 3}, {3, 3}) == 1.0);
  CHECK(mcn::temporal_iou({3, 3}, {3, 4}) == 0.5);
  CHECK(mcn::temporal_iou({0, 1}, {4, 5}) == 0.0);
  CHECK(mcn::temporal_iou({0, 3}, {2, 5}) == doctest::Approx(2.0 / 6.0));
  CHECK(mcn::temporal_iou({0, 5}, {2, 3}) == doctest::Approx(2.0 / 6.0));
}

TEST_CASE("iou is symmetric, bounded, and 1 only on identity") {
  mcn::Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const int n = rng.uniform_int(1, 8);
    const int s1 = rng.uniform_int(0, n - 1), e1 = rng.uniform_int(s1, n - 1);
    const int s2 = rng.uniform_int(0, n - 1), e2 = rng.uniform_int(s2, n - 1);
    const mcn::Span a{s1, e1}, b{s2, e2};
    const double iou = mcn::temporal_iou(a, b);
    CHECK(iou == mcn::temporal_iou(b, a));
    CHECK(iou >= 0.0);
    CHECK(iou <= 1.0);
    CHECK((iou == 1.0) == (a == b));
  }
}

TEST_CASE("endpoint features for known spans") {
  for (int n : {1, 4, 6, 17}) {
    const auto full = mcn::temporal_endpoint_feature({0, n - 1}, n);
    CHECK(full.first == 0.0);
    CHECK(full.second == 1.0);
  }
  const auto first = mcn::temporal_endpoint_feature({0, 0}, 6);
  CHECK(first.first == 0.0);
  CHECK(first.second == doctest::Approx(0.1667).epsilon(1e-3));
  const auto mid = mcn::temporal_endpoint_feature({3, 4}, 6);
  CHECK(mid.first == 0.5);
  CHECK(mid.second == doctest::Approx(0.8333).epsilon(1e-3));
}

TEST_CASE("endpoint features are ordered and width equals length over n") {
  mcn::Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    const int n = rng.uniform_int(1, 12);
    const int s = rng.uniform_int(0, n - 1), e = rng.uniform_int(s, n - 1);
    const auto tef = mcn::temporal_endpoint_feature({s, e}, n);
    CHECK(tef.first >= 0.0);
    CHECK(tef.first < tef.second);
    CHECK(tef.second <= 1.0);
    const double width = static_cast<double>(e - s + 1) / n;
    CHECK(tef.second - tef.first == doctest::Approx(width).epsilon(1e-12));
  }
}

TEST_CASE("agreement accepts and rejects the documented patterns") {
  CHECK(mcn::check_agreement({{2, 3}, {2, 3}, {2, 3}, {2, 3}}));
  CHECK(mcn::check_agreement({{3, 3}, {3, 3}, {3, 3}, {3, 4}}));
  CHECK_FALSE(mcn::check_agreement({{0, 0}, {2, 2}, {4, 4}, {5, 5}}));
  // Three agree only pairwise through the middle: [0,0] vs [2,2] differ by 2.
  CHECK_FALSE(mcn::check_agreement({{0, 0}, {1, 1}, {2, 2}, {5, 5}}));
  // Off-by-one on both endpoints still counts as agreeing.
  CHECK(mcn::check_agreement({{1, 2}, {2, 3}, {1, 3}, {5, 5}}));
}

TEST_CASE("agreement needs exactly four annotations") {
  CHECK_THROWS_AS((void)mcn::check_agreement({{0, 0}, {0, 0}, {0, 0}}), mcn::DataError);
  CHECK_THROWS_AS((void)mcn::check_agreement({{0, 0}, {0, 0}, {0, 0}, {0, 0}, {0, 0}}),
                  mcn::DataError);
}

TEST_CASE("agreement ignores annotation order") {
  mcn::Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    std::vector<mcn::Span> spans;
    for (int a = 0; a < 4; ++a) {
      const int s = rng.uniform_int(0, 5);
      spans.push_back({s, rng.uniform_int(s, 5)});
    }
    const bool base = mcn::check_agreement(spans);
    std::vector<mcn::Span> shuffled = spans;
    for (int p = 0; p < 5; ++p) {
      rng.shuffle(shuffled);
      CHECK(mcn::check_agreement(shuffled) == base);
    }
  }
}

TEST_CASE("consensus picks the modal span, earliest on ties") {
  CHECK(mcn::consensus_span({{3, 3}, {3, 3}, {3, 3}, {3, 4}}) == mcn::Span{3, 3});
  CHECK(mcn::consensus_span({{1, 2}, {4, 5}, {1, 2}, {4, 5}}) == mcn::Span{1, 2});
  CHECK(mcn::consensus_span({{5, 5}, {0, 1}, {2, 2}, {4, 4}}) == mcn::Span{0, 1});
  CHECK(mcn::consensus_span({{2, 2}}) == mcn::Span{2, 2});
}

TEST_CASE("span length is inclusive") {
  CHECK(mcn::Span{0, 0}.length() == 1);
  CHECK(mcn::Span{2, 5}.length() == 4);
}
