#include <doctest.h>

#include <cstdint>

#include "rilab/balancing.hpp"
#include "rilab/rational.hpp"

using namespace rilab;

TEST_CASE("worked examples") {
  const std::vector<std::int64_t> d{4, 3, 2, 1};
  const auto r = balance_permutation(d, 2, 2);
  CHECK(r.sigma == std::vector<std::size_t>{1, 4, 2, 3});
  CHECK(r.blocks == std::vector<std::int64_t>{5, 5});
  CHECK(r.spread == 0);
  CHECK(r.bound_ok);

  const std::vector<std::int64_t> e{5, 1, 1, 1, 1, 1};
  const auto s = balance_permutation(e, 3, 2);
  CHECK(s.blocks == std::vector<std::int64_t>{6, 2, 2});
  CHECK(s.spread == 4);
  CHECK(s.sigma == std::vector<std::size_t>{1, 6, 2, 4, 3, 5});

  const std::vector<Rational> c(6, Rational(2, 3));
  const auto t = balance_permutation(c, 2, 3);
  CHECK(t.blocks == std::vector<Rational>{2, 2});
  CHECK(t.spread == 0);
}

TEST_CASE("invalid instances") {
  const std::vector<std::int64_t> up{1, 2, 3, 4};
  CHECK_THROWS_AS(balance_permutation(up, 2, 2), std::invalid_argument);
  const std::vector<std::int64_t> d{4, 3, 2, 1};
  CHECK_THROWS_AS(balance_permutation(d, 3, 2), std::invalid_argument);
  CHECK_THROWS_AS(balance_permutation(d, 0, 4), std::invalid_argument);
  const std::vector<std::int64_t> neg{1, 0, -1, -2};
  CHECK_THROWS_AS(balance_permutation(neg, 2, 2), std::invalid_argument);
}

namespace {

/// Calls visit on every nonincreasing sequence of length n over {0..top}.
template <class F>
void for_each_sorted(std::size_t n, std::int64_t top, F&& visit) {
  std::vector<std::int64_t> d(n, top);
  while (true) {
    visit(d);
    // next nonincreasing sequence in reverse lexicographic order
    std::size_t i = n;
    while (i > 0 && d[i - 1] == 0) --i;
    if (i == 0) return;
    --d[i - 1];
    for (std::size_t k = i; k < n; ++k) d[k] = d[i - 1];
  }
}

}  // namespace

TEST_CASE("exhaustive bound for N <= 12") {
  std::size_t instances = 0, violations = 0;
  for (std::size_t n = 1; n <= 12; ++n) {
    for (std::size_t l = 1; l <= n; ++l) {
      if (n % l != 0) continue;
      const std::size_t m = n / l;
      for_each_sorted(n, 4, [&](const std::vector<std::int64_t>& d) {
        ++instances;
        const auto r = balance_permutation(d, l, m);
        if (!verify_balance(std::span<const std::int64_t>(d), l, m, r)) ++violations;
      });
    }
  }
  CHECK(instances > 10000);
  CHECK(violations == 0);
}
