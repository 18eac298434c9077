#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "killchain/cdr.hpp"
#include "killchain/harness.hpp"

using namespace killchain;

namespace {

std::string line(const char* family, const char* object,
                 const char* extras = "") {
    std::string s = R"({"seq":1,"ts":1000,"host":"h1","family":")";
    s += family;
    s += R"(","subject":{"kind":"Process","id":"42:7","attrs":{"exe_path":"/usr/sbin/nginx"}},"object":)";
    s += object;
    s += extras;
    s += "}";
    return s;
}

}  // namespace

TEST_CASE("parse_event maps a READ record directly") {
    auto e = parse_event(line(
        "READ", R"({"kind":"File","id":"/etc/passwd"})", R"(,"bytes":2048)"));
    CHECK(e.family == Family::READ);
    CHECK(e.bytes == 2048);
    CHECK(e.subject.kind == EntityKind::Process);
    CHECK(e.subject.attr("exe_path") == "/usr/sbin/nginx");
    CHECK(e.object.local_id == "/etc/passwd");
}

TEST_CASE("parse_event accepts SETUID onto a user object") {
    auto e = parse_event(line(
        "SETUID", R"({"kind":"User","id":"uid:0","attrs":{"uid":"0"}})",
        R"(,"aux":{"uid":"0"})"));
    CHECK(e.family == Family::SETUID);
    CHECK(e.object.kind == EntityKind::User);
    CHECK(e.object.attr("uid") == "0");
}

TEST_CASE("parse_event rejects family/object kind mismatches") {
    auto bad = line("READ", R"({"kind":"Process","id":"9:1","attrs":{"exe_path":"/x"}})");
    try {
        parse_event(bad);
        FAIL("expected ParseError");
    } catch (const ParseError& err) {
        CHECK(err.kind() == ParseErrorKind::BadFamilyObjectKind);
    }
}

TEST_CASE("parse_event error kinds") {
    auto kind_of = [](const std::string& text) {
        try {
            parse_event(text);
        } catch (const ParseError& err) {
            return err.kind();
        }
        throw std::runtime_error("no error raised");
    };
    CHECK(kind_of("not json at all") == ParseErrorKind::MalformedJson);
    CHECK(kind_of(R"({"seq":1,"ts":2})") == ParseErrorKind::MissingField);
    CHECK(kind_of(line("FROB", R"({"kind":"File","id":"/x"})")) ==
          ParseErrorKind::BadFamilyObjectKind);
    CHECK(kind_of(line("READ", R"({"kind":"File","id":"/x"})", R"(,"bytes":-5)")) ==
          ParseErrorKind::NegativeBytes);
    // bytes on a family that cannot carry them
    CHECK(kind_of(line("FORK",
                       R"({"kind":"Process","id":"43:9","attrs":{"exe_path":"/y"}})",
                       R"(,"bytes":10)")) == ParseErrorKind::NegativeBytes);
    // socket without ip/port
    CHECK(kind_of(line("SEND", R"({"kind":"Socket","id":"s1"})")) ==
          ParseErrorKind::MissingField);
}

TEST_CASE("serialize/parse round-trip over generated scenarios") {
    for (const auto& name : scenario_names()) {
        auto sc = gen_scenario(name, 5, 1'000'000);
        for (const Event& e : sc.events) {
            Event back = parse_event(serialize_event(e));
            CHECK(back.seq == e.seq);
            CHECK(back.ts == e.ts);
            CHECK(back.family == e.family);
            CHECK(back.host_id == e.host_id);
            CHECK(back.subject.local_id == e.subject.local_id);
            CHECK(back.object.local_id == e.object.local_id);
            CHECK(back.object.attrs == e.object.attrs);
            CHECK(back.bytes == e.bytes);
            CHECK(back.flags == e.flags);
            CHECK(back.aux == e.aux);
            // serialized form is a fixed point
            CHECK(serialize_event(back) == serialize_event(e));
        }
    }
}

namespace {

std::string jsonl_of(const std::vector<Event>& events) {
    std::string text;
    for (const Event& e : events) text += serialize_event(e) + "\n";
    return text;
}

Event mini(std::uint64_t seq, std::int64_t ts, const std::string& host) {
    Event e;
    e.seq = seq;
    e.ts = ts;
    e.host_id = host;
    e.family = Family::READ;
    e.subject.kind = EntityKind::Process;
    e.subject.host_id = host;
    e.subject.local_id = "1:1";
    e.subject.attrs["exe_path"] = "/bin/p";
    e.object.kind = EntityKind::File;
    e.object.host_id = host;
    e.object.local_id = "/f";
    return e;
}

}  // namespace

TEST_CASE("merge_streams interleaves by timestamp") {
    auto s1 = EventStream::from_string(jsonl_of({mini(1, 1, "a"), mini(2, 3, "a")}));
    auto s2 = EventStream::from_string(jsonl_of({mini(1, 2, "b")}));
    std::vector<EventStream> v;
    v.push_back(std::move(s1));
    v.push_back(std::move(s2));
    auto merged = merge_streams(std::move(v)).read_all();
    REQUIRE(merged.size() == 3);
    CHECK(merged[0].ts == 1);
    CHECK(merged[1].ts == 2);
    CHECK(merged[2].ts == 3);
}

TEST_CASE("merging with an empty stream is the identity") {
    auto s1 = EventStream::from_string(jsonl_of({mini(1, 5, "a"), mini(2, 9, "a")}));
    auto s2 = EventStream::from_string("");
    std::vector<EventStream> v;
    v.push_back(std::move(s1));
    v.push_back(std::move(s2));
    auto merged = merge_streams(std::move(v)).read_all();
    REQUIRE(merged.size() == 2);
    CHECK(merged[0].ts == 5);
    CHECK(merged[1].ts == 9);
}

TEST_CASE("equal timestamps break ties by host then seq") {
    auto s1 = EventStream::from_string(jsonl_of({mini(4, 7, "zeta")}));
    auto s2 = EventStream::from_string(jsonl_of({mini(2, 7, "alpha"), mini(3, 7, "alpha")}));
    std::vector<EventStream> v;
    v.push_back(std::move(s1));
    v.push_back(std::move(s2));
    auto merged = merge_streams(std::move(v)).read_all();
    REQUIRE(merged.size() == 3);
    CHECK(merged[0].host_id == "alpha");
    CHECK(merged[0].seq == 2);
    CHECK(merged[1].seq == 3);
    CHECK(merged[2].host_id == "zeta");
}

TEST_CASE("merge output is totally ordered for random sorted streams") {
    std::mt19937_64 rng(99);
    for (int round = 0; round < 25; ++round) {
        std::vector<EventStream> streams;
        int n_streams = 1 + static_cast<int>(rng() % 4);
        for (int s = 0; s < n_streams; ++s) {
            std::vector<Event> ev;
            std::int64_t ts = 0;
            std::uint64_t seq = 0;
            int n = static_cast<int>(rng() % 20);
            std::string host = "host" + std::to_string(s);
            for (int i = 0; i < n; ++i) {
                ts += static_cast<std::int64_t>(rng() % 3);  // non-decreasing
                ev.push_back(mini(++seq, ts, host));
            }
            streams.push_back(EventStream::from_string(jsonl_of(ev)));
        }
        auto merged = merge_streams(std::move(streams)).read_all();
        for (std::size_t i = 1; i < merged.size(); ++i) {
            auto ka = std::tie(merged[i - 1].ts, merged[i - 1].host_id, merged[i - 1].seq);
            auto kb = std::tie(merged[i].ts, merged[i].host_id, merged[i].seq);
            CHECK(ka < kb);
        }
    }
}

TEST_CASE("streams that violate their own ordering raise StreamOrderError") {
    auto bad_ts = EventStream::from_string(jsonl_of({mini(1, 10, "a"), mini(2, 4, "a")}));
    Event e;
    REQUIRE(bad_ts.next(e));
    CHECK_THROWS_AS(bad_ts.next(e), StreamOrderError);

    auto bad_seq = EventStream::from_string(jsonl_of({mini(5, 1, "a"), mini(5, 2, "a")}));
    REQUIRE(bad_seq.next(e));
    CHECK_THROWS_AS(bad_seq.next(e), StreamOrderError);
}
