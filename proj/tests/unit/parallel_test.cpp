#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <stdexcept>

#include "ata/parallel.hpp"

using namespace ata;

TEST(Parallel, EveryIndexRunsOnce) {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(Parallel, PropagatesExceptions) {
  EXPECT_THROW(parallel_for(50, 3,
                            [](std::size_t i) {
                              if (i == 17) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}

TEST(Parallel, EnvironmentOverridesRequest) {
  ::setenv("ATA_THREADS", "3", 1);
  EXPECT_EQ(resolve_threads(8), 3u);
  ::unsetenv("ATA_THREADS");
  EXPECT_EQ(resolve_threads(8), 8u);
  EXPECT_GE(resolve_threads(0), 1u);
}
