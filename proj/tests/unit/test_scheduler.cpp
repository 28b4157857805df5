#include "cellpic/error.hpp"
#include "cellpic/scheduler.hpp"

#include "dag.hpp"
#include "doctest.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <numeric>
#include <stdexcept>
#include <thread>

using namespace cellpic;
using namespace std::chrono_literals;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "cellpic_test_scheduler";
    std::filesystem::create_directories(dir);
    return dir / name;
}

std::map<std::string, TraceEvent> by_tag(const std::vector<TraceEvent>& events) {
    std::map<std::string, TraceEvent> out;
    for (const auto& e : events) out[e.tag] = e;
    return out;
}

TaskSpec make(std::function<void()> work, std::vector<DataRegion> regions, int queue, std::string tag) {
    TaskSpec t;
    t.work = std::move(work);
    t.regions = std::move(regions);
    t.queue = queue;
    t.tag = std::move(tag);
    return t;
}

} // namespace

TEST_CASE("write then read of the same region is ordered") {
    const RegionId a = RegionId::named("A");
    int value = 0;
    int observed = -1;
    Scheduler s(2, true);
    s.submit(make([&] { std::this_thread::sleep_for(20ms); value = 7; }, {DataRegion::out(a)}, 1, "T1"));
    s.submit(make([&] { observed = value; }, {DataRegion::in(a)}, 1, "T2"));
    s.wait({1});
    CHECK(observed == 7);
    const auto t = by_tag(s.trace());
    REQUIRE(t.size() == 2);
    CHECK(t.at("T1").end_ns <= t.at("T2").start_ns);
}

TEST_CASE("concurrent readers overlap on two workers") {
    const RegionId a = RegionId::named("A");
    std::atomic<int> running{0};
    std::atomic<int> peak{0};
    auto body = [&] {
        const int now = ++running;
        int prev = peak.load();
        while (now > prev && !peak.compare_exchange_weak(prev, now)) {
        }
        std::this_thread::sleep_for(50ms);
        --running;
    };
    Scheduler s(2, true);
    s.submit(make(body, {DataRegion::in(a)}, 0, "R1"));
    s.submit(make(body, {DataRegion::in(a)}, 0, "R2"));
    s.taskwait_all();
    CHECK(peak.load() >= 2);
    const auto t = by_tag(s.trace());
    CHECK(t.at("R1").start_ns < t.at("R2").end_ns);
    CHECK(t.at("R2").start_ns < t.at("R1").end_ns);
}

TEST_CASE("writers on disjoint regions overlap") {
    std::atomic<int> running{0};
    std::atomic<int> peak{0};
    auto body = [&] {
        const int now = ++running;
        int prev = peak.load();
        while (now > prev && !peak.compare_exchange_weak(prev, now)) {
        }
        std::this_thread::sleep_for(50ms);
        --running;
    };
    Scheduler s(2);
    s.submit(make(body, {DataRegion::out(RegionId::named("X"))}, 0, "W1"));
    s.submit(make(body, {DataRegion::out(RegionId::named("Y"))}, 0, "W2"));
    s.taskwait_all();
    CHECK(peak.load() >= 2);
}

TEST_CASE("read then write is ordered and the reader sees the old value") {
    const RegionId a = RegionId::named("A");
    int value = 1;
    int observed = 0;
    Scheduler s(3, true);
    s.submit(make([&] { std::this_thread::sleep_for(20ms); observed = value; }, {DataRegion::in(a)}, 0, "R"));
    s.submit(make([&] { value = 2; }, {DataRegion::out(a)}, 0, "W"));
    s.taskwait_all();
    CHECK(observed == 1);
    CHECK(value == 2);
    const auto t = by_tag(s.trace());
    CHECK(t.at("R").end_ns <= t.at("W").start_ns);
}

TEST_CASE("wait on an empty queue returns immediately") {
    Scheduler s(2);
    const auto start = std::chrono::steady_clock::now();
    s.wait({5});
    CHECK(std::chrono::steady_clock::now() - start < 100ms);
}

TEST_CASE("wait on queues only covers those queues") {
    std::atomic<bool> release{false};
    std::atomic<int> done_q1{0};
    Scheduler s(2, true);
    s.submit(make([&] { done_q1++; }, {}, 1, "q1a"));
    s.submit(make([&] { done_q1++; }, {}, 2, "q2a"));
    auto slow = s.submit(make([&] {
        while (!release.load()) std::this_thread::sleep_for(1ms);
    }, {}, 3, "q3"));
    s.wait({1, 2});
    const std::int64_t returned = s.now_ns();
    CHECK(done_q1.load() == 2);
    CHECK_FALSE(slow.done());
    for (const auto& e : s.trace()) {
        if (e.queue == 1 || e.queue == 2) CHECK(e.end_ns <= returned);
    }
    release = true;
    s.wait({3});
    CHECK(slow.done());
}

TEST_CASE("taskwait_all covers nested submissions and is idempotent") {
    std::atomic<int> count{0};
    Scheduler s(2);
    for (int i = 0; i < 8; ++i) {
        s.submit(make([&] {
            for (int k = 0; k < 4; ++k) s.submit(make([&] { std::this_thread::sleep_for(1ms); count++; }, {}, 1, "inner"));
            count++;
        }, {}, 0, "outer"));
    }
    s.taskwait_all();
    CHECK(count.load() == 40);
    s.taskwait_all();
    CHECK(count.load() == 40);
}

TEST_CASE("nested waits inside tasks do not deadlock a single worker") {
    Scheduler s(1);
    std::atomic<int> inner{0};
    s.submit(make([&] {
        auto h = s.submit(make([&] { inner++; }, {}, 2, "inner"));
        s.wait(h);
    }, {}, 0, "outer"));
    s.taskwait_all();
    CHECK(inner.load() == 1);
}

TEST_CASE("parallel_for_blocks splits by grainsize") {
    Scheduler s(2, true);
    std::vector<int> data(1000);
    std::iota(data.begin(), data.end(), 1);
    std::vector<long> partial(2, 0);
    s.parallel_for_blocks(0, 1000, 500, [&](std::size_t b, std::size_t e) {
        long sum = 0;
        for (std::size_t i = b; i < e; ++i) sum += data[i];
        partial[b / 500] = sum;
    }, 0, "pfb");
    CHECK(s.trace().size() == 2);
    CHECK(partial[0] + partial[1] == 500500);

    s.clear_trace();
    std::vector<int> hits(37, 0);
    s.parallel_for_blocks(0, 37, 1, [&](std::size_t b, std::size_t e) {
        CHECK(e == b + 1);
        hits[b]++;
    });
    CHECK(s.trace().size() == 37);
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));

    s.clear_trace();
    std::vector<int> ragged(10, 0);
    s.parallel_for_blocks(0, 10, 4, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) ragged[i]++;
    });
    CHECK(s.trace().size() == 3);
    CHECK(std::all_of(ragged.begin(), ragged.end(), [](int h) { return h == 1; }));

    s.clear_trace();
    s.parallel_for_blocks(5, 5, 3, [&](std::size_t, std::size_t) { FAIL("empty range ran"); });
    CHECK(s.trace().empty());
    CHECK_THROWS_AS(s.parallel_for_blocks(0, 4, 0, [](std::size_t, std::size_t) {}), SchedulerError);
}

TEST_CASE("data region lifecycle orders enter, users and exit") {
    const RegionId a = RegionId::named("A");
    const std::vector<RegionId> regions{a};
    Scheduler s(3, true);
    std::atomic<bool> reader_finished{false};
    bool exit_saw_reader = false;
    s.data_region_enter(regions, 0);
    s.submit(make([&] { std::this_thread::sleep_for(30ms); reader_finished = true; }, {DataRegion::in(a)}, 0, "T"));
    s.submit(make([&] { exit_saw_reader = reader_finished.load(); }, {DataRegion::out(a)}, 0, "probe"));
    auto exit = s.data_region_exit(regions, 0);
    s.wait({0});
    CHECK(exit.done());
    CHECK(exit_saw_reader);
    const auto events = s.trace();
    std::map<std::string, std::vector<TraceEvent>> tags;
    for (const auto& e : events) tags[e.tag].push_back(e);
    REQUIRE(tags["enter"].size() == 1);
    REQUIRE(tags["exit"].size() == 1);
    CHECK(tags["enter"][0].end_ns <= tags["T"][0].start_ns);
    CHECK(tags["T"][0].end_ns <= tags["exit"][0].start_ns);
}

TEST_CASE("data region exit without enter is rejected") {
    const std::vector<RegionId> regions{RegionId::named("never-entered")};
    Scheduler s(1);
    CHECK_THROWS_AS(s.data_region_exit(regions), SchedulerError);
}

TEST_CASE("invalid submissions are rejected") {
    const RegionId a = RegionId::named("A");
    Scheduler s(1);
    CHECK_THROWS_AS(s.submit(make([] {}, {DataRegion::in(a), DataRegion::out(a)}, 0, "dup")), SchedulerError);
    CHECK_THROWS_AS(s.submit(make([] {}, {}, -1, "neg")), SchedulerError);
    s.shutdown();
    CHECK_THROWS_AS(s.submit(make([] {}, {}, 0, "late")), SchedulerError);
    CHECK_THROWS_AS(Scheduler(0), SchedulerError);
}

TEST_CASE("task exceptions surface at the next wait") {
    Scheduler s(2);
    auto bad = s.submit(make([] { throw std::runtime_error("boom"); }, {}, 0, "bad"));
    CHECK_THROWS_WITH_AS(s.wait(bad), "boom", std::runtime_error);

    s.submit(make([] { throw std::logic_error("queue failure"); }, {}, 4, "bad"));
    CHECK_THROWS_AS(s.wait({4}), std::logic_error);
    s.wait({4});

    std::atomic<int> after{0};
    s.submit(make([] { throw std::runtime_error("global"); }, {}, 1, "bad"));
    s.submit(make([&] { after++; }, {}, 2, "fine"));
    CHECK_THROWS_AS(s.taskwait_all(), std::runtime_error);
    CHECK(after.load() == 1);
    s.taskwait_all();
}

TEST_CASE("a failing task still releases its dependents") {
    const RegionId a = RegionId::named("A");
    Scheduler s(2);
    std::atomic<bool> ran{false};
    s.submit(make([] { throw std::runtime_error("first"); }, {DataRegion::out(a)}, 0, "bad"));
    auto next = s.submit(make([&] { ran = true; }, {DataRegion::in(a)}, 0, "next"));
    CHECK_THROWS(s.taskwait_all());
    CHECK(next.done());
    CHECK(ran.load());
}

TEST_CASE("submit does not block behind a long task") {
    const RegionId a = RegionId::named("A");
    Scheduler s(2);
    s.submit(make([] { std::this_thread::sleep_for(300ms); }, {DataRegion::out(a)}, 0, "long"));
    const auto start = std::chrono::steady_clock::now();
    auto dependent = s.submit(make([] {}, {DataRegion::inout(a)}, 0, "dependent"));
    const auto elapsed = std::chrono::steady_clock::now() - start;
    CHECK(elapsed < 50ms);
    CHECK_FALSE(dependent.done());
    s.taskwait_all();
    CHECK(dependent.done());
}

TEST_CASE("trace CSV round trip") {
    Scheduler s(2, true);
    s.submit(make([] {}, {}, 3, "plain"));
    s.submit(make([] {}, {}, 1, "with,comma"));
    s.taskwait_all();
    const auto path = temp_file("roundtrip.csv");
    s.write_trace_csv(path);
    const auto back = read_trace_csv(path);
    const auto orig = s.trace();
    REQUIRE(back.size() == orig.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].queue == orig[i].queue);
        CHECK(back[i].worker == orig[i].worker);
        CHECK(back[i].start_ns == orig[i].start_ns);
        CHECK(back[i].end_ns == orig[i].end_ns);
        CHECK(back[i].start_ns <= back[i].end_ns);
        CHECK(back[i].worker >= 0);
        CHECK(back[i].worker < 2);
    }
    CHECK(std::any_of(back.begin(), back.end(), [](const TraceEvent& e) { return e.tag == "with;comma"; }));
}

TEST_CASE("tracing can be toggled") {
    Scheduler s(1, false);
    s.submit(make([] {}, {}, 0, "off"));
    s.taskwait_all();
    CHECK(s.trace().empty());
    s.set_tracing(true);
    s.submit(make([] {}, {}, 0, "on"));
    s.taskwait_all();
    REQUIRE(s.trace().size() == 1);
    CHECK(s.trace()[0].tag == "on");
}

TEST_CASE("randomized task graphs are serializable") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        CAPTURE(seed);
        const auto r = dag::run(seed, 2000, 10, 4, 4, temp_file("dag_" + std::to_string(seed) + ".csv"));
        INFO(r.detail);
        CHECK(r.serial_match);
        CHECK(r.replay_match);
        CHECK(r.flow_ok);
        CHECK(r.wait_ok);
        CHECK(r.traced == 2000);
    }
}
