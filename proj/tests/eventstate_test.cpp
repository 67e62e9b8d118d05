#include <doctest.h>

#include <atomic>
#include <thread>

#include "sdsn/core/error.hpp"
#include "sdsn/eventstate/event_manager.hpp"
#include "sdsn/eventstate/state_manager.hpp"

using namespace sdsn;
using namespace sdsn::eventstate;

TEST_CASE("glob matching") {
  CHECK(globMatch("*", "anything"));
  CHECK(globMatch("e*", "eAssist"));
  CHECK(globMatch("*Sent", "eTourReservationSent"));
  CHECK(globMatch("sys.*.completed", "sys.instance.completed"));
  CHECK_FALSE(globMatch("e*", "sys.fault"));
  CHECK_FALSE(globMatch("exact", "exactly"));
  CHECK(globMatch("exact", "exact"));
}

TEST_CASE("publish assigns consecutive sequence numbers") {
  EventManager em;
  auto s1 = em.publish("eA", {"v", "", ""}, {});
  auto s2 = em.publish("eB", {"v", "", ""}, {});
  CHECK(s2 == s1 + 1);
  CHECK(em.lastSeq() == s2);
}

TEST_CASE("subscriptions receive matching events in publish order") {
  EventManager em;
  std::mutex mu;
  std::vector<std::uint64_t> seen;
  em.subscribe("e*", [&](const Event& e) {
    std::lock_guard<std::mutex> l(mu);
    seen.push_back(e.seq);
    return true;
  });
  // A second subscription with a flow filter sees only its VSN.
  std::vector<std::string> happyOnly;
  em.subscribe("*", [&](const Event& e) {
    std::lock_guard<std::mutex> l(mu);
    happyOnly.push_back(e.name);
    return true;
  }, {"vsnHappy", "", ""});

  em.publish("eA", {"vsnHappy", "pA", "i1"}, {});
  em.publish("sys.noise", {"vsnHappy", "", ""}, {});
  em.publish("eB", {"vsnSun", "", ""}, {});
  em.publish("eC", {"vsnHappy", "pA", "i1"}, {});
  em.drain();

  std::lock_guard<std::mutex> l(mu);
  REQUIRE(seen.size() == 3);
  CHECK(std::is_sorted(seen.begin(), seen.end()));
  CHECK(happyOnly == std::vector<std::string>{"eA", "sys.noise", "eC"});
}

TEST_CASE("failing sinks are retried three times, then the delivery is dropped") {
  EventManager em;
  std::atomic<int> attempts{0};
  em.subscribe("*", [&](const Event&) {
    ++attempts;
    return false;
  });
  em.publish("eA", {"v", "", ""}, {});
  em.drain();
  CHECK(attempts.load() == 4);  // 1 attempt + 3 retries
  CHECK(em.droppedDeliveries() == 1);
}

TEST_CASE("unsubscribe is idempotent only once") {
  EventManager em;
  auto id = em.subscribe("*", [](const Event&) { return true; });
  em.unsubscribe(id);
  try {
    em.unsubscribe(id);
    FAIL("expected NotFound");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotFound);
  }
}

TEST_CASE("bounded ring evicts oldest events") {
  EventManager em(5);
  for (int i = 0; i < 10; ++i) em.publish("e" + std::to_string(i), {"v", "", ""}, {});
  em.drain();
  auto events = em.readSince(0);
  REQUIRE(events.size() == 5);
  CHECK(events.front().name == "e5");
  CHECK(events.back().name == "e9");
  // readSince also pages from a midpoint.
  auto tail = em.readSince(events.front().seq);
  CHECK(tail.size() == 4);
}

TEST_CASE("state: unknown keys read as integer zero with epoch timestamp") {
  StateManager sm;
  auto rec = sm.read("vsnHappy.throughput.used");
  CHECK(std::get<std::int64_t>(rec.value) == 0);
  CHECK(rec.updatedAt == 0);
  CHECK(rec.version == 0);
}

TEST_CASE("state update and adjust") {
  StateManager sm;
  auto rec = sm.adjust("sc.used", +1);
  CHECK(std::get<std::int64_t>(rec.value) == 1);
  CHECK(rec.updatedAt > 0);
  rec = sm.set("mode", std::string("degraded"));
  CHECK(std::get<std::string>(rec.value) == "degraded");
  try {
    sm.adjust("mode", +1);
    FAIL("expected BadParams");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BadParams);
  }
}

TEST_CASE("clamped adjust never goes below zero") {
  StateManager sm;
  for (int i = 0; i < 5; ++i) sm.adjust("used", +1, true);
  sm.adjust("used", -1, true);
  CHECK(std::get<std::int64_t>(sm.read("used").value) == 4);
  for (int i = 0; i < 10; ++i) sm.adjust("used", -1, true);
  CHECK(std::get<std::int64_t>(sm.read("used").value) == 0);
}

TEST_CASE("concurrent +1/-1 deltas settle to zero") {
  // Oracle: 50 increments and 50 decrements sum to 0 regardless of order.
  StateManager sm;
  std::vector<std::thread> workers;
  for (int i = 0; i < 50; ++i) {
    workers.emplace_back([&] { sm.adjust("k", +1); });
  }
  for (auto& t : workers) t.join();
  CHECK(std::get<std::int64_t>(sm.read("k").value) == 50);
  workers.clear();
  for (int i = 0; i < 50; ++i) {
    workers.emplace_back([&] { sm.adjust("k", -1); });
  }
  for (auto& t : workers) t.join();
  CHECK(std::get<std::int64_t>(sm.read("k").value) == 0);
  CHECK(sm.read("k").version == 100);
}

TEST_CASE("state subscriptions observe mutations by glob") {
  StateManager sm;
  std::vector<std::string> hits;
  auto id = sm.subscribe("vsn.*", [&](const std::string& key, const StateRecord& before,
                                      const StateRecord& after) {
    hits.push_back(key + ":" + scalarToText(before.value) + "->" + scalarToText(after.value));
  });
  sm.adjust("vsn.happy.used", +1);
  sm.set("other", std::int64_t{7});
  REQUIRE(hits.size() == 1);
  CHECK(hits[0] == "vsn.happy.used:0->1");
  sm.unsubscribe(id);
  try {
    sm.unsubscribe(id);
    FAIL("expected NotFound");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotFound);
  }
}

TEST_CASE("snapshot and erase by prefix") {
  StateManager sm;
  sm.set("a.one", std::int64_t{1});
  sm.set("a.two", std::int64_t{2});
  sm.set("b.one", std::int64_t{3});
  CHECK(sm.snapshot("a.").size() == 2);
  CHECK(sm.snapshot().size() == 3);
  sm.erasePrefix("a.");
  CHECK(sm.snapshot("a.").empty());
  CHECK(sm.snapshot().size() == 1);
}
