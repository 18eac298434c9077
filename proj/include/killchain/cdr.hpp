// cdr.hpp — OS-neutral audit event representation ("jsonl-v1"): parsing,
// validation, serialization, and time-ordered merging of per-host streams.

#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace killchain {

enum class EntityKind { Process, File, Socket, Memory, User };

enum class Family {
    READ,
    WRITE,
    EXEC,
    FORK,
    MPROTECT,
    CHMOD,
    SETUID,
    SEND,
    RECV,
    UNLINK,
    CONNECT,
    ACCEPT,
};

inline const char* to_string(EntityKind k) {
    switch (k) {
        case EntityKind::Process: return "Process";
        case EntityKind::File: return "File";
        case EntityKind::Socket: return "Socket";
        case EntityKind::Memory: return "Memory";
        case EntityKind::User: return "User";
    }
    return "?";
}

inline const char* to_string(Family f) {
    switch (f) {
        case Family::READ: return "READ";
        case Family::WRITE: return "WRITE";
        case Family::EXEC: return "EXEC";
        case Family::FORK: return "FORK";
        case Family::MPROTECT: return "MPROTECT";
        case Family::CHMOD: return "CHMOD";
        case Family::SETUID: return "SETUID";
        case Family::SEND: return "SEND";
        case Family::RECV: return "RECV";
        case Family::UNLINK: return "UNLINK";
        case Family::CONNECT: return "CONNECT";
        case Family::ACCEPT: return "ACCEPT";
    }
    return "?";
}

inline std::optional<EntityKind> entity_kind_from(std::string_view s) {
    if (s == "Process") return EntityKind::Process;
    if (s == "File") return EntityKind::File;
    if (s == "Socket") return EntityKind::Socket;
    if (s == "Memory") return EntityKind::Memory;
    if (s == "User") return EntityKind::User;
    return std::nullopt;
}

inline std::optional<Family> family_from(std::string_view s) {
    static const std::map<std::string_view, Family> table = {
        {"READ", Family::READ},       {"WRITE", Family::WRITE},
        {"EXEC", Family::EXEC},       {"FORK", Family::FORK},
        {"MPROTECT", Family::MPROTECT}, {"CHMOD", Family::CHMOD},
        {"SETUID", Family::SETUID},   {"SEND", Family::SEND},
        {"RECV", Family::RECV},       {"UNLINK", Family::UNLINK},
        {"CONNECT", Family::CONNECT}, {"ACCEPT", Family::ACCEPT},
    };
    auto it = table.find(s);
    if (it == table.end()) return std::nullopt;
    return it->second;
}

// Object kind an event family must carry. Subject is always a process.
inline EntityKind object_kind_for(Family f) {
    switch (f) {
        case Family::FORK:
        case Family::EXEC: return EntityKind::Process;
        case Family::READ:
        case Family::WRITE:
        case Family::CHMOD:
        case Family::UNLINK: return EntityKind::File;
        case Family::SEND:
        case Family::RECV:
        case Family::CONNECT:
        case Family::ACCEPT: return EntityKind::Socket;
        case Family::MPROTECT: return EntityKind::Memory;
        case Family::SETUID: return EntityKind::User;
    }
    return EntityKind::File;
}

inline bool family_carries_bytes(Family f) {
    return f == Family::READ || f == Family::WRITE || f == Family::SEND ||
           f == Family::RECV;
}

// (kind, host_id, local_id) identifies a base entity within a run.
struct EntityRef {
    EntityKind kind = EntityKind::Process;
    std::string host_id;
    std::string local_id;
    std::map<std::string, std::string> attrs;

    std::string attr(const std::string& key) const {
        auto it = attrs.find(key);
        return it == attrs.end() ? std::string() : it->second;
    }
};

struct Event {
    std::uint64_t seq = 0;
    std::int64_t ts = 0;  // microseconds since epoch
    std::string host_id;
    Family family = Family::READ;
    EntityRef subject;  // always a process
    EntityRef object;
    std::uint64_t bytes = 0;
    std::set<std::string> flags;
    std::map<std::string, std::string> aux;
};

enum class ParseErrorKind { MalformedJson, MissingField, BadFamilyObjectKind, NegativeBytes };

class ParseError : public std::runtime_error {
public:
    ParseError(ParseErrorKind kind, std::string detail)
        : std::runtime_error("parse error: " + detail), kind_(kind) {}
    ParseErrorKind kind() const { return kind_; }

private:
    ParseErrorKind kind_;
};

class StreamOrderError : public std::runtime_error {
public:
    explicit StreamOrderError(const std::string& what) : std::runtime_error(what) {}
};

namespace cdr_detail {

inline const nlohmann::json& require(const nlohmann::json& j, const char* key,
                                     const std::string& ctx) {
    auto it = j.find(key);
    if (it == j.end())
        throw ParseError(ParseErrorKind::MissingField, ctx + "." + key);
    return *it;
}

inline EntityRef parse_entity(const nlohmann::json& j, const std::string& ctx,
                              const std::string& host) {
    if (!j.is_object())
        throw ParseError(ParseErrorKind::MalformedJson, ctx + " is not an object");
    EntityRef e;
    auto kind = entity_kind_from(require(j, "kind", ctx).get<std::string>());
    if (!kind)
        throw ParseError(ParseErrorKind::BadFamilyObjectKind, ctx + ".kind unknown");
    e.kind = *kind;
    e.local_id = require(j, "id", ctx).get<std::string>();
    e.host_id = j.value("host", host);
    if (auto it = j.find("attrs"); it != j.end()) {
        if (!it->is_object())
            throw ParseError(ParseErrorKind::MalformedJson, ctx + ".attrs not an object");
        for (auto& [k, v] : it->items()) e.attrs[k] = v.get<std::string>();
    }
    return e;
}

}  // namespace cdr_detail

// Parses one jsonl-v1 record. Throws ParseError when the line is not a
// valid, invariant-respecting event.
inline Event parse_event(std::string_view line) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw ParseError(ParseErrorKind::MalformedJson, "not a JSON object");

    using cdr_detail::require;
    Event e;
    const auto& seq = require(j, "seq", "event");
    const auto& ts = require(j, "ts", "event");
    if (!seq.is_number_integer() || !ts.is_number_integer())
        throw ParseError(ParseErrorKind::MalformedJson, "seq/ts must be integers");
    if (seq.is_number_integer() && seq.get<std::int64_t>() < 0)
        throw ParseError(ParseErrorKind::MalformedJson, "seq must be non-negative");
    e.seq = seq.get<std::uint64_t>();
    e.ts = ts.get<std::int64_t>();
    e.host_id = require(j, "host", "event").get<std::string>();

    auto fam = family_from(require(j, "family", "event").get<std::string>());
    if (!fam)
        throw ParseError(ParseErrorKind::BadFamilyObjectKind, "unknown family");
    e.family = *fam;

    e.subject = cdr_detail::parse_entity(require(j, "subject", "event"), "subject", e.host_id);
    e.object = cdr_detail::parse_entity(require(j, "object", "event"), "object", e.host_id);

    if (e.subject.kind != EntityKind::Process)
        throw ParseError(ParseErrorKind::BadFamilyObjectKind, "subject must be a Process");
    if (e.object.kind != object_kind_for(e.family))
        throw ParseError(ParseErrorKind::BadFamilyObjectKind,
                         std::string("family ") + to_string(e.family) +
                             " cannot target a " + to_string(e.object.kind));

    if (auto it = j.find("bytes"); it != j.end()) {
        if (!it->is_number_integer())
            throw ParseError(ParseErrorKind::MalformedJson, "bytes must be an integer");
        std::int64_t b = it->get<std::int64_t>();
        if (b < 0) throw ParseError(ParseErrorKind::NegativeBytes, "bytes < 0");
        if (b > 0 && !family_carries_bytes(e.family))
            throw ParseError(ParseErrorKind::NegativeBytes,
                             std::string("bytes not applicable to ") + to_string(e.family));
        e.bytes = static_cast<std::uint64_t>(b);
    }
    if (auto it = j.find("flags"); it != j.end()) {
        if (!it->is_array())
            throw ParseError(ParseErrorKind::MalformedJson, "flags must be an array");
        for (const auto& f : *it) e.flags.insert(f.get<std::string>());
    }
    if (auto it = j.find("aux"); it != j.end()) {
        if (!it->is_object())
            throw ParseError(ParseErrorKind::MalformedJson, "aux must be an object");
        for (auto& [k, v] : it->items()) e.aux[k] = v.get<std::string>();
    }

    // Per-kind required attrs.
    if (e.subject.attr("exe_path").empty())
        throw ParseError(ParseErrorKind::MissingField, "subject.attrs.exe_path");
    auto check_obj = [&](EntityKind kind, const char* attr) {
        if (e.object.kind == kind && e.object.attr(attr).empty())
            throw ParseError(ParseErrorKind::MissingField,
                             std::string("object.attrs.") + attr);
    };
    check_obj(EntityKind::Socket, "ip");
    check_obj(EntityKind::Socket, "port");
    check_obj(EntityKind::User, "uid");
    if (e.object.kind == EntityKind::Process && e.object.attr("exe_path").empty())
        throw ParseError(ParseErrorKind::MissingField, "object.attrs.exe_path");
    return e;
}

inline nlohmann::ordered_json entity_to_json(const EntityRef& e) {
    nlohmann::ordered_json j;
    j["kind"] = to_string(e.kind);
    j["id"] = e.local_id;
    if (!e.attrs.empty()) j["attrs"] = e.attrs;
    return j;
}

inline std::string serialize_event(const Event& e) {
    nlohmann::ordered_json j;
    j["seq"] = e.seq;
    j["ts"] = e.ts;
    j["host"] = e.host_id;
    j["family"] = to_string(e.family);
    j["subject"] = entity_to_json(e.subject);
    j["object"] = entity_to_json(e.object);
    if (e.bytes > 0) j["bytes"] = e.bytes;
    if (!e.flags.empty()) j["flags"] = e.flags;
    if (!e.aux.empty()) j["aux"] = e.aux;
    return j.dump();
}

// One already-parsed, order-checked event source. Streams must be
// non-decreasing in ts with strictly increasing seq.
class EventStream {
public:
    static EventStream from_file(const std::string& path) {
        auto in = std::make_shared<std::ifstream>(path);
        if (!*in) throw std::runtime_error("cannot open stream: " + path);
        return EventStream(path, std::move(in));
    }

    static EventStream from_stdin() { return EventStream("<stdin>", nullptr); }

    static EventStream from_string(std::string text, std::string name = "<memory>") {
        return EventStream(std::move(name), std::make_shared<std::istringstream>(std::move(text)));
    }

    const std::string& source() const { return source_; }
    static constexpr const char* format() { return "jsonl-v1"; }

    // Pulls the next event; false at end of stream.
    bool next(Event& out) {
        std::istream& in = owned_ ? *owned_ : std::cin;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            out = parse_event(line);
            if (have_prev_) {
                if (out.ts < prev_ts_)
                    throw StreamOrderError(source_ + ": ts decreased at seq " +
                                           std::to_string(out.seq));
                if (out.seq <= prev_seq_)
                    throw StreamOrderError(source_ + ": seq not strictly increasing at " +
                                           std::to_string(out.seq));
            }
            prev_ts_ = out.ts;
            prev_seq_ = out.seq;
            have_prev_ = true;
            return true;
        }
        return false;
    }

    std::vector<Event> read_all() {
        std::vector<Event> v;
        Event e;
        while (next(e)) v.push_back(e);
        return v;
    }

private:
    EventStream(std::string source, std::shared_ptr<std::istream> owned)
        : source_(std::move(source)), owned_(std::move(owned)) {}

    std::string source_;
    std::shared_ptr<std::istream> owned_;  // null: stdin
    bool have_prev_ = false;
    std::int64_t prev_ts_ = 0;
    std::uint64_t prev_seq_ = 0;
};

// K-way merge ordered by (ts, host_id, seq), stable for equal keys.
class MergedStream {
public:
    explicit MergedStream(std::vector<EventStream> streams)
        : streams_(std::move(streams)) {
        for (std::size_t i = 0; i < streams_.size(); ++i) {
            Event e;
            if (streams_[i].next(e)) heap_.push(Item{std::move(e), i});
        }
    }

    bool next(Event& out) {
        if (heap_.empty()) return false;
        Item top = heap_.top();
        heap_.pop();
        out = std::move(top.event);
        Event e;
        if (streams_[top.idx].next(e)) heap_.push(Item{std::move(e), top.idx});
        return true;
    }

    std::vector<Event> read_all() {
        std::vector<Event> v;
        Event e;
        while (next(e)) v.push_back(e);
        return v;
    }

private:
    struct Item {
        Event event;
        std::size_t idx;
    };
    struct Later {
        bool operator()(const Item& a, const Item& b) const {
            auto ka = std::tie(a.event.ts, a.event.host_id, a.event.seq);
            auto kb = std::tie(b.event.ts, b.event.host_id, b.event.seq);
            if (ka != kb) return kb < ka;
            return b.idx < a.idx;  // stability across streams
        }
    };

    std::vector<EventStream> streams_;
    std::priority_queue<Item, std::vector<Item>, Later> heap_;
};

inline MergedStream merge_streams(std::vector<EventStream> streams) {
    return MergedStream(std::move(streams));
}

}  // namespace killchain
