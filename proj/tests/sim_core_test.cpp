#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "ktsim/event_queue.hpp"
#include "ktsim/rng.hpp"
#include "ktsim/time.hpp"

using namespace ktsim;

TEST_CASE("cycle conversion matches hand arithmetic") {
    CpuClock clock(2'400'000'000);
    CHECK(clock.cycles_to_duration(60000).nanos() == 25000);
    CHECK(clock.cycles_to_duration(0).nanos() == 0);
    CHECK(clock.cycles_to_duration(155000).nanos() == 64583);
}

TEST_CASE("cycle round trip stays within one cycle period") {
    CpuClock clock(2'400'000'000);
    for (int64_t n : {int64_t(1), int64_t(95), int64_t(60000), int64_t(155000),
                      int64_t(1'000'000'000'000)}) {
        int64_t back = clock.duration_to_cycles(clock.cycles_to_duration(n));
        CHECK(std::abs(back - n) <= 1);
    }
    CHECK_THROWS_AS(CpuClock(0), std::invalid_argument);
}

TEST_CASE("uniform duration draws: degenerate interval and bounds") {
    Rng gen(1);
    CHECK(gen.uniform_duration(Duration::ms(0), Duration::ms(0)).nanos() == 0);
    for (int i = 0; i < 1000; ++i) {
        Duration d = gen.uniform_duration(Duration::ms(2), Duration::ms(5));
        CHECK(d >= Duration::ms(2));
        CHECK(d <= Duration::ms(5));
    }
    CHECK_THROWS_AS(gen.uniform_duration(Duration::ms(5), Duration::ms(2)), std::invalid_argument);
}

TEST_CASE("uniform mean over one million draws hits the midpoint") {
    // sample-mean oracle: mean of U[0, 20 ms] is 10 ms
    Rng gen(42);
    double sum = 0;
    const int n = 1'000'000;
    for (int i = 0; i < n; ++i)
        sum += static_cast<double>(gen.uniform_duration(Duration::ms(0), Duration::ms(20)).nanos());
    double mean_ms = sum / n / 1e6;
    CHECK(mean_ms == doctest::Approx(10.0).epsilon(0.005));
}

TEST_CASE("identical seeds give identical draw sequences") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());

    Rng c(42), d(42);
    Rng cs = c.derive("stream"), ds = d.derive("stream");
    for (int i = 0; i < 100; ++i) CHECK(cs.next_u64() == ds.next_u64());
}

TEST_CASE("derived streams are independent of each other") {
    Rng root(7);
    Rng a = root.derive("alpha");
    Rng b = root.derive("beta");
    int same = 0;
    for (int i = 0; i < 64; ++i)
        if (a.next_u64() == b.next_u64()) ++same;
    CHECK(same == 0);
    // deriving never consumes root state
    Rng root2(7);
    CHECK(root.next_u64() == root2.next_u64());
}

TEST_CASE("gaussian draws: zero sigma, sample std, truncation") {
    Rng gen(3);
    CHECK(gen.gaussian_duration(Duration::ms(170), Duration::ms(0), Duration::ms(0)).nanos() ==
          170'000'000);

    double sum = 0, sq = 0;
    const int n = 1'000'000;
    for (int i = 0; i < n; ++i) {
        double v = static_cast<double>(
            gen.gaussian_duration(Duration::ms(170), Duration::ms(40), Duration::ms(0)).nanos());
        sum += v;
        sq += v * v;
    }
    double mean = sum / n;
    double std_ms = std::sqrt(sq / n - mean * mean) / 1e6;
    CHECK(std_ms == doctest::Approx(40.0).epsilon(0.0125)); // 40 +- 0.5

    for (int i = 0; i < 10000; ++i) {
        CHECK(gen.gaussian_duration(Duration::ms(10), Duration::ms(40), Duration::ms(0)).nanos() >=
              0);
    }
}

TEST_CASE("event queue pops in time order with stable ties") {
    EventQueue<int> q;
    q.push(Timestamp::ns(50), 1);
    q.push(Timestamp::ns(10), 2);
    q.push(Timestamp::ns(50), 3);
    q.push(Timestamp::ns(10), 4);

    auto e1 = q.pop();
    auto e2 = q.pop();
    auto e3 = q.pop();
    auto e4 = q.pop();
    REQUIRE(e1);
    REQUIRE(e4);
    CHECK(e1->second == 2);
    CHECK(e2->second == 4);
    CHECK(e3->second == 1);
    CHECK(e4->second == 3);
    CHECK(!q.pop());
}

TEST_CASE("event queue property: every pop returns the earliest pending event") {
    Rng gen(11);
    for (int trial = 0; trial < 50; ++trial) {
        EventQueue<uint64_t> q;
        std::multiset<int64_t> mirror;
        for (int step = 0; step < 400; ++step) {
            if (mirror.empty() || gen.bernoulli(0.6)) {
                auto t = static_cast<int64_t>(gen.uniform_below(10000));
                q.push(Timestamp::ns(t), gen.next_u64());
                mirror.insert(t);
            } else {
                auto e = q.pop();
                REQUIRE(e);
                CHECK(e->first.nanos() == *mirror.begin());
                mirror.erase(mirror.begin());
            }
        }
        Timestamp last = Timestamp::ns(-1);
        while (auto e = q.pop()) {
            CHECK(e->first >= last);
            last = e->first;
        }
    }
}
