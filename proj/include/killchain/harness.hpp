// harness.hpp — deterministic synthetic audit-trace generation: scripted
// attack scenarios with ground-truth stage labels and benign background
// profiles (browser, web server, mail daemon, shell admin). Structure —
// entity names, per-pair byte totals, session counts — is fixed by
// (profile, duration); the seed only jitters timing and ordering, so a
// model trained on one seed transfers to streams generated with another.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "killchain/cdr.hpp"

namespace killchain {

class UnknownScenario : public std::runtime_error {
public:
    explicit UnknownScenario(const std::string& name)
        : std::runtime_error("unknown scenario: " + name) {}
};

struct Scenario {
    std::string name;
    std::string platform;
    std::string host;
    std::set<int> declared_stages;
    std::vector<Event> events;
    std::vector<int> stage_of;  // per event; 0 = supporting background step
};

struct GroundTruthRecord {
    std::uint64_t seq;
    std::string label;  // "attack"
    std::string scenario;
    int stage;
};

struct Interleaved {
    std::vector<Event> events;  // re-sequenced, time-ordered
    std::vector<GroundTruthRecord> truth;
};

namespace harness_detail {

class TraceBuilder {
public:
    TraceBuilder(std::string host, std::uint64_t seed, std::int64_t start_ts)
        : host_(std::move(host)), rng_(seed), t_(start_ts) {}

    EntityRef proc(int pid, const std::string& exe, const std::string& name = "") {
        EntityRef e;
        e.kind = EntityKind::Process;
        e.host_id = host_;
        e.local_id = std::to_string(pid) + ":" + std::to_string(pid * 31 + 7);
        e.attrs["exe_path"] = exe;
        if (!name.empty()) e.attrs["name"] = name;
        return e;
    }

    EntityRef file(const std::string& path) {
        EntityRef e;
        e.kind = EntityKind::File;
        e.host_id = host_;
        e.local_id = path;
        return e;
    }

    EntityRef sock(const std::string& ip, int port) {
        EntityRef e;
        e.kind = EntityKind::Socket;
        e.host_id = host_;
        e.local_id = ip + ":" + std::to_string(port) + "/tcp";
        e.attrs["ip"] = ip;
        e.attrs["port"] = std::to_string(port);
        return e;
    }

    EntityRef user(const std::string& uid) {
        EntityRef e;
        e.kind = EntityKind::User;
        e.host_id = host_;
        e.local_id = "uid:" + uid;
        e.attrs["uid"] = uid;
        return e;
    }

    EntityRef mem(const std::string& id) {
        EntityRef e;
        e.kind = EntityKind::Memory;
        e.host_id = host_;
        e.local_id = id;
        return e;
    }

    void at(std::int64_t ts) { t_ = std::max(t_, ts); }
    std::int64_t now() const { return t_; }

    // Base gap with +-40% jitter; ordering within the builder is stable.
    void gap(std::int64_t base_us = 100000) {
        std::uniform_int_distribution<std::int64_t> d(base_us * 6 / 10, base_us * 14 / 10);
        t_ += d(rng_);
    }

    void emit(Family fam, const EntityRef& subj, const EntityRef& obj, int stage,
              std::uint64_t bytes = 0, std::set<std::string> flags = {},
              std::map<std::string, std::string> aux = {}) {
        Event e;
        e.seq = ++seq_;
        e.ts = t_;
        e.host_id = host_;
        e.family = fam;
        e.subject = subj;
        e.object = obj;
        e.bytes = bytes;
        e.flags = std::move(flags);
        e.aux = std::move(aux);
        events_.push_back(std::move(e));
        stages_.push_back(stage);
        gap();
    }

    void accept(const EntityRef& p, const EntityRef& s, int st) {
        emit(Family::ACCEPT, p, s, st);
    }
    void connect(const EntityRef& p, const EntityRef& s, int st) {
        emit(Family::CONNECT, p, s, st);
    }
    void recv(const EntityRef& p, const EntityRef& s, std::uint64_t b, int st) {
        emit(Family::RECV, p, s, st, b);
    }
    void send(const EntityRef& p, const EntityRef& s, std::uint64_t b, int st) {
        emit(Family::SEND, p, s, st, b);
    }
    void read(const EntityRef& p, const EntityRef& f, std::uint64_t b, int st) {
        emit(Family::READ, p, f, st, b);
    }
    void write(const EntityRef& p, const EntityRef& f, std::uint64_t b, int st) {
        emit(Family::WRITE, p, f, st, b);
    }
    void fork(const EntityRef& parent, const EntityRef& child, int st) {
        emit(Family::FORK, parent, child, st, 0, {},
             {{"exe", child.attr("exe_path")}});
    }
    void exec(EntityRef& p, const std::string& image, int st) {
        EntityRef post = p;
        post.attrs["exe_path"] = image;
        post.attrs.erase("name");
        emit(Family::EXEC, p, post, st, 0, {}, {{"exe", image}});
        p = post;
    }
    void mprotect(const EntityRef& p, const EntityRef& m, int st) {
        emit(Family::MPROTECT, p, m, st, 0, {"PROT_EXEC"});
    }
    void chmod_exec(const EntityRef& p, const EntityRef& f, int st) {
        emit(Family::CHMOD, p, f, st, 0, {"PROT_EXEC"});
    }
    void setuid(const EntityRef& p, const EntityRef& u, int st) {
        emit(Family::SETUID, p, u, st, 0, {}, {{"uid", u.attr("uid")}});
    }
    void unlink(const EntityRef& p, const EntityRef& f, int st) {
        emit(Family::UNLINK, p, f, st);
    }

    std::vector<Event> take_events() { return std::move(events_); }
    std::vector<int> take_stages() { return std::move(stages_); }

private:
    std::string host_;
    std::mt19937_64 rng_;
    std::int64_t t_;
    std::uint64_t seq_ = 0;
    std::vector<Event> events_;
    std::vector<int> stages_;
};

}  // namespace harness_detail

inline std::vector<std::string> scenario_names() {
    return {"running_example", "drive_by",          "trojan_a",
            "trojan_b",        "spyware",           "eternal_blue_like",
            "rat",             "webshell",          "password_hijack"};
}

// Compiles one attack script into a time-ordered stream. Deterministic per
// (name, seed, start_ts).
inline Scenario gen_scenario(const std::string& name, std::uint64_t seed,
                             std::int64_t start_ts) {
    using harness_detail::TraceBuilder;
    Scenario sc;
    sc.name = name;

    auto nginx_campaign = [&](TraceBuilder& b, const std::string& atk_ip,
                              const std::string& cc_ip, int base_pid,
                              bool benign_epilogue) {
        auto nginx = b.proc(base_pid, "/usr/sbin/nginx");
        auto s_atk = b.sock(atk_ip, 31337);
        auto s_cc = b.sock(cc_ip, 4444);
        auto region = b.mem("m:0x7f40");
        auto whoami = b.proc(base_pid + 59, "/usr/bin/whoami", "whoami");
        auto gather = b.file("/tmp/.gather");
        auto passwd = b.file("/etc/passwd");

        b.accept(nginx, s_atk, 1);
        b.recv(nginx, s_atk, 8000, 1);       // Untrusted_Read
        b.mprotect(nginx, region, 1);        // Make_Mem_Exec
        b.connect(nginx, s_cc, 2);
        b.send(nginx, s_cc, 300, 2);         // CnC
        b.setuid(nginx, b.user("0"), 3);     // Switch_SU
        b.fork(nginx, whoami, 4);            // Sensitive_Command
        b.write(whoami, gather, 1024, 4);
        b.read(nginx, passwd, 2048, 4);      // Sensitive_Read
        b.read(nginx, gather, 1024, 4);
        b.send(nginx, s_cc, 3072, 6);        // Sensitive_Leak
        b.unlink(nginx, gather, 7);          // Sensitive_Temp_RM + Untrusted_File_RM

        if (benign_epilogue) {
            // Unrelated consumer of an attack byproduct: nginx's log read by
            // a cat spawned under sshd (a disjoint process tree).
            auto errlog = b.file("/usr/log/nginx-error.log");
            auto sshd = b.proc(base_pid + 158, "/usr/sbin/sshd");
            auto cat = b.proc(base_pid + 159, "/bin/cat", "cat");
            b.write(nginx, errlog, 256, 0);
            b.accept(sshd, b.sock("10.0.0.5", 22), 0);
            b.fork(sshd, cat, 0);
            b.read(cat, errlog, 256, 0);
        }
        sc.declared_stages = {1, 2, 3, 4, 6, 7};
    };

    auto drop_and_run = [&](TraceBuilder& b, EntityRef& browser, const std::string& atk_ip,
                            const std::string& drop_path, std::uint64_t drop_bytes,
                            int dropped_pid, EntityRef& out_proc) {
        auto s_a = b.sock(atk_ip, 443);
        b.connect(browser, s_a, 1);
        b.recv(browser, s_a, drop_bytes + 2000, 1);  // Untrusted_Read
        auto dropped = b.file(drop_path);
        b.write(browser, dropped, drop_bytes, 1);
        b.chmod_exec(browser, dropped, 1);  // Make_File_Exec
        out_proc = b.proc(dropped_pid, browser.attr("exe_path"));
        b.fork(browser, out_proc, 1);
        b.exec(out_proc, drop_path, 1);  // Untrusted_File_Exec
    };

    if (name == "running_example") {
        sc.platform = "freebsd";
        sc.host = "h1";
        TraceBuilder b(sc.host, seed * 2 + 1, start_ts);
        nginx_campaign(b, "203.0.113.66", "198.51.100.7", 1042, true);
        sc.events = b.take_events();
        sc.stage_of = b.take_stages();
    } else if (name == "password_hijack") {
        sc.platform = "freebsd";
        sc.host = "h9";
        TraceBuilder b(sc.host, seed * 2 + 9, start_ts);
        nginx_campaign(b, "203.0.113.57", "198.51.100.13", 9042, false);
        sc.events = b.take_events();
        sc.stage_of = b.take_stages();
    } else if (name == "drive_by") {
        sc.platform = "ubuntu";
        sc.host = "h2";
        TraceBuilder b(sc.host, seed * 2 + 2, start_ts);
        auto firefox = b.proc(2001, "/usr/bin/firefox");
        EntityRef net;
        drop_and_run(b, firefox, "203.0.113.50", "/home/user/Downloads/net", 48000, 2100, net);
        auto s_cc = b.sock("198.51.100.7", 4444);
        b.connect(net, s_cc, 2);
        b.recv(net, s_cc, 400, 2);
        b.send(net, s_cc, 200, 2);  // CnC
        auto bash = b.proc(2200, "/usr/bin/firefox");
        b.fork(net, bash, 2);
        b.exec(bash, "/bin/bash", 2);  // Shell_Exec
        auto whoami = b.proc(2301, "/usr/bin/whoami", "whoami");
        auto uname = b.proc(2302, "/usr/bin/uname", "uname");
        auto netstat = b.proc(2303, "/usr/bin/netstat", "netstat");
        b.fork(bash, whoami, 4);
        b.fork(bash, uname, 4);
        b.fork(bash, netstat, 4);
        auto loot = b.file("/tmp/loot");
        b.write(whoami, loot, 512, 4);
        b.read(bash, b.file("/home/user/company_secret.txt"), 4096, 4);  // Sensitive_Read
        b.write(bash, loot, 4096, 4);
        b.read(net, loot, 4608, 6);
        b.send(net, s_cc, 4608, 6);  // Sensitive_Leak
        b.unlink(net, b.file("/home/user/Downloads/net"), 7);  // Untrusted_File_RM
        sc.declared_stages = {1, 2, 4, 6, 7};
        sc.events = b.take_events();
        sc.stage_of = b.take_stages();
    } else if (name == "trojan_a") {
        sc.platform = "ubuntu";
        sc.host = "h3";
        TraceBuilder b(sc.host, seed * 2 + 3, start_ts);
        auto firefox = b.proc(3001, "/usr/bin/firefox");
        EntityRef troj;
        drop_and_run(b, firefox, "203.0.113.51", "/home/user/Downloads/diff", 26000, 3100, troj);
        auto s_cc = b.sock("198.51.100.8", 5555);
        b.send(troj, s_cc, 150, 2);  // CnC (connect records missing upstream)
        auto dash = b.proc(3200, "/home/user/Downloads/diff");
        b.fork(troj, dash, 2);
        b.exec(dash, "/bin/dash", 2);  // Shell_Exec
        auto ifcfg = b.proc(3301, "/sbin/ifconfig", "ifconfig");
        auto hostn = b.proc(3302, "/bin/hostname", "hostname");
        auto netst = b.proc(3303, "/usr/bin/netstat", "netstat");
        b.fork(dash, ifcfg, 4);
        b.fork(dash, hostn, 4);
        b.fork(dash, netst, 4);
        auto info = b.file("/tmp/info");
        b.write(ifcfg, info, 256, 4);
        b.read(dash, b.file("/home/user/password.txt"), 1024, 4);  // Sensitive_Read
        b.write(dash, info, 1024, 4);
        b.read(troj, info, 1280, 6);
        b.send(troj, s_cc, 1280, 6);  // Sensitive_Leak; cleanup records missing
        sc.declared_stages = {1, 2, 4, 6};
        sc.events = b.take_events();
        sc.stage_of = b.take_stages();
    } else if (name == "trojan_b") {
        sc.platform = "ubuntu";
        sc.host = "h4";
        TraceBuilder b(sc.host, seed * 2 + 4, start_ts);
        auto firefox = b.proc(4001, "/usr/bin/firefox");
        EntityRef tedit;
        drop_and_run(b, firefox, "203.0.113.52", "/home/user/tedit", 30000, 4100, tedit);
        auto s_cc = b.sock("198.51.100.9", 4444);
        b.connect(tedit, s_cc, 2);
        b.send(tedit, s_cc, 180, 2);  // CnC
        auto dash = b.proc(4200, "/home/user/tedit");
        b.fork(tedit, dash, 2);
        b.exec(dash, "/bin/dash", 2);  // Shell_Exec
        auto whoami = b.proc(4301, "/usr/bin/whoami", "whoami");
        auto ifcfg = b.proc(4302, "/sbin/ifconfig", "ifconfig");
        auto netst = b.proc(4303, "/usr/bin/netstat", "netstat");
        auto uname = b.proc(4304, "/usr/bin/uname", "uname");
        b.fork(dash, whoami, 4);
        b.fork(dash, ifcfg, 4);
        b.fork(dash, netst, 4);
        b.fork(dash, uname, 4);
        // remote deployment of a second payload
        auto py = b.file("/home/user/py");
        b.write(tedit, py, 9000, 6);
        b.chmod_exec(tedit, py, 1);  // Make_File_Exec
        auto pyproc = b.proc(4400, "/home/user/tedit");
        b.fork(tedit, pyproc, 1);
        b.exec(pyproc, "/home/user/py", 1);  // Untrusted_File_Exec
        auto st = b.file("/tmp/st");
        b.write(whoami, st, 512, 4);
        b.read(dash, b.file("/home/user/password.txt"), 1024, 4);  // Sensitive_Read
        b.write(dash, st, 1024, 4);
        b.read(tedit, st, 1536, 6);
        b.send(tedit, s_cc, 1536, 6);      // Sensitive_Leak
        b.unlink(tedit, py, 7);            // Untrusted_File_RM
        sc.declared_stages = {1, 2, 4, 6, 7};
        sc.events = b.take_events();
        sc.stage_of = b.take_stages();
    } else if (name == "spyware") {
        sc.platform = "windows";
        sc.host = "h5";
        TraceBuilder b(sc.host, seed * 2 + 5, start_ts);
        auto firefox = b.proc(5001, "C:\\Program Files\\Mozilla\\firefox.exe");
        auto s_a = b.sock("203.0.113.53", 443);
        b.connect(firefox, s_a, 1);
        b.recv(firefox, s_a, 20000, 1);  // Untrusted_Read
        auto procman = b.file("C:\\Users\\u\\AppData\\procman.exe");
        b.write(firefox, procman, 18000, 1);
        auto malware = b.proc(5100, "C:\\Program Files\\Mozilla\\firefox.exe");
        b.fork(firefox, malware, 1);
        b.exec(malware, "C:\\Users\\u\\AppData\\procman.exe", 1);  // Untrusted_File_Exec
        auto s_cc = b.sock("198.51.100.10", 8443);
        b.connect(malware, s_cc, 2);
        b.recv(malware, s_cc, 500, 2);
        b.send(malware, s_cc, 250, 2);  // CnC
        auto cmd = b.proc(5200, "C:\\Users\\u\\AppData\\procman.exe");
        b.fork(malware, cmd, 2);
        b.exec(cmd, "C:\\Windows\\System32\\cmd.exe", 2);  // Shell_Exec
        auto hostn = b.proc(5301, "C:\\Windows\\System32\\hostname.exe", "hostname");
        auto whoami = b.proc(5302, "C:\\Windows\\System32\\whoami.exe", "whoami");
        auto ipcfg = b.proc(5303, "C:\\Windows\\System32\\ipconfig.exe", "ipconfig");
        b.fork(cmd, hostn, 4);
        b.fork(cmd, whoami, 4);
        b.fork(cmd, ipcfg, 4);
        b.read(cmd, b.file("C:\\Users\\u\\Documents\\password.txt"), 2048, 4);
        auto burnout = b.file("C:\\Users\\u\\AppData\\burnout.bat");
        b.write(malware, burnout, 512, 7);
        auto bat = b.proc(5400, "C:\\Users\\u\\AppData\\procman.exe");
        b.fork(malware, bat, 7);
        b.exec(bat, "C:\\Users\\u\\AppData\\burnout.bat", 7);  // Untrusted_File_Exec
        b.unlink(bat, procman, 7);  // Untrusted_File_RM
        b.unlink(bat, b.file("C:\\Users\\u\\Documents\\password.txt"), 7);
        sc.declared_stages = {1, 2, 4, 7};
        sc.events = b.take_events();
        sc.stage_of = b.take_stages();
    } else if (name == "eternal_blue_like") {
        sc.platform = "windows";
        sc.host = "h6";
        TraceBuilder b(sc.host, seed * 2 + 6, start_ts);
        auto lsass = b.proc(6001, "C:\\Windows\\System32\\lsass.exe", "lsass.exe");
        auto s_a = b.sock("203.0.113.54", 49152);
        b.accept(lsass, s_a, 1);
        b.recv(lsass, s_a, 12000, 1);  // Untrusted_Read
        b.mprotect(lsass, b.mem("m:0x9a00"), 1);  // Make_Mem_Exec (injection)
        auto rundll = b.proc(6100, "C:\\Windows\\System32\\rundll32.exe", "rundll32.exe");
        b.fork(lsass, rundll, 1);
        auto s_cc = b.sock("198.51.100.11", 443);
        b.connect(rundll, s_cc, 2);
        b.recv(rundll, s_cc, 9000, 2);
        auto met = b.file("C:\\Windows\\Temp\\met.dll");
        b.write(rundll, met, 8000, 1);
        EntityRef meterpreter = rundll;
        b.exec(meterpreter, "C:\\Windows\\Temp\\met.dll", 1);  // Untrusted_File_Exec
        b.send(meterpreter, s_cc, 300, 2);                     // CnC
        b.read(meterpreter, b.file("C:\\Users\\u\\Documents\\password.txt"), 2048, 4);
        b.send(meterpreter, s_cc, 2048, 6);  // Sensitive_Leak
        b.unlink(meterpreter,
                 b.file("C:\\Windows\\System32\\winevt\\Logs\\Security.evtx"), 7);
        b.unlink(meterpreter, met, 7);  // Untrusted_File_RM
        sc.declared_stages = {1, 2, 4, 6, 7};
        sc.events = b.take_events();
        sc.stage_of = b.take_stages();
    } else if (name == "rat") {
        sc.platform = "freebsd";
        sc.host = "h7";
        TraceBuilder b(sc.host, seed * 2 + 7, start_ts);
        auto nginx = b.proc(7001, "/usr/sbin/nginx");
        auto s_a = b.sock("203.0.113.55", 40000);
        b.accept(nginx, s_a, 1);
        b.recv(nginx, s_a, 9000, 1);              // Untrusted_Read
        b.mprotect(nginx, b.mem("m:0x5b00"), 1);  // Make_Mem_Exec
        auto ratd = b.file("/tmp/ratd");
        b.write(nginx, ratd, 16000, 1);
        b.chmod_exec(nginx, ratd, 1);  // Make_File_Exec
        auto rat = b.proc(7100, "/usr/sbin/nginx");
        b.fork(nginx, rat, 1);
        b.exec(rat, "/tmp/ratd", 1);  // Untrusted_File_Exec
        auto s_cc = b.sock("198.51.100.12", 9001);
        b.connect(rat, s_cc, 2);
        b.send(rat, s_cc, 400, 2);       // CnC
        b.setuid(rat, b.user("0"), 3);   // Switch_SU
        auto uname = b.proc(7201, "/usr/bin/uname", "uname");
        b.fork(rat, uname, 4);  // Sensitive_Command
        auto uout = b.file("/tmp/u.out");
        b.write(uname, uout, 128, 4);
        auto py = b.file("/home/user/py");
        b.write(rat, py, 6000, 6);
        b.chmod_exec(rat, py, 1);
        auto pyproc = b.proc(7300, "/tmp/ratd");
        b.fork(rat, pyproc, 1);
        b.exec(pyproc, "/home/user/py", 1);  // Untrusted_File_Exec
        b.read(pyproc, b.file("/etc/shadow"), 1024, 4);  // Sensitive_Read
        auto ex = b.file("/tmp/ex");
        b.write(pyproc, ex, 1024, 6);
        b.read(rat, ex, 1024, 6);
        b.send(rat, s_cc, 1152, 6);  // Sensitive_Leak
        b.unlink(rat, py, 7);        // Untrusted_File_RM
        sc.declared_stages = {1, 2, 3, 4, 6, 7};
        sc.events = b.take_events();
        sc.stage_of = b.take_stages();
    } else if (name == "webshell") {
        sc.platform = "freebsd";
        sc.host = "h8";
        TraceBuilder b(sc.host, seed * 2 + 8, start_ts);
        auto nginx = b.proc(8001, "/usr/sbin/nginx");
        auto s_a = b.sock("203.0.113.56", 41000);
        b.accept(nginx, s_a, 1);
        b.recv(nginx, s_a, 4096, 1);     // Untrusted_Read (web-shell command)
        b.send(nginx, s_a, 512, 2);      // CnC (shell replies)
        b.setuid(nginx, b.user("0"), 3); // Switch_SU
        b.read(nginx, b.file("/home/user/Passwd.txt"), 2048, 4);  // Sensitive_Read
        b.send(nginx, s_a, 2048, 6);     // Sensitive_Leak
        sc.declared_stages = {1, 2, 3, 4, 6};
        sc.events = b.take_events();
        sc.stage_of = b.take_stages();
    } else {
        throw UnknownScenario(name);
    }
    return sc;
}

struct BenignProfile {
    std::string host = "h1";
    bool browser = true;
    bool webserver = true;
    bool maildaemon = true;
    bool shell_admin = true;
    double event_rate = 20.0;  // events per virtual second
};

// Benign background activity, including patterns that legitimately trigger
// rules (external reads by servers and browsers, admin shells over SSH,
// nginx re-reading /etc/passwd) so a noise model has material to learn.
inline std::vector<Event> gen_benign(const BenignProfile& profile,
                                     std::int64_t duration_us, std::uint64_t seed) {
    using harness_detail::TraceBuilder;
    std::vector<Event> out;
    if (profile.event_rate <= 0 || duration_us <= 0) return out;

    std::int64_t t0 = 1'600'000'000'000'000;
    double budget = profile.event_rate * (static_cast<double>(duration_us) / 1e6);
    int slots = std::max(1, static_cast<int>(budget / 20.0));  // ~20 events per slot

    std::vector<Event> all;
    auto span_gap = [&](int count) {
        return count > 0 ? duration_us / (count + 1) : duration_us;
    };

    if (profile.webserver) {
        TraceBuilder b(profile.host, seed ^ 0x11, t0);
        auto nginx = b.proc(800, "/usr/sbin/nginx");
        auto passwd = b.file("/etc/passwd");
        auto acclog = b.file("/var/log/nginx/access.log");
        b.read(nginx, passwd, 2048, 0);  // startup
        int visitors = 4 * slots;
        std::int64_t g = span_gap(visitors);
        for (int i = 0; i < visitors; ++i) {
            bool external = (i % 3) != 0;
            auto client = external
                              ? b.sock("198.18.0." + std::to_string(10 + i % 200),
                                       40000 + i)
                              : b.sock("10.0.0." + std::to_string(20 + i % 30), 39000 + i);
            b.accept(nginx, client, 0);
            b.recv(nginx, client, 600, 0);  // Untrusted_Read when external
            b.send(nginx, client, 2048, 0);
            b.write(nginx, acclog, 120, 0);
            if (i == visitors / 2) b.read(nginx, passwd, 2048, 0);  // config reload
            b.at(t0 + (i + 1) * g);
        }
        auto ev = b.take_events();
        all.insert(all.end(), ev.begin(), ev.end());
    }

    if (profile.browser) {
        TraceBuilder b(profile.host, seed ^ 0x22, t0 + 1000);
        auto firefox = b.proc(2001, "/usr/bin/firefox");
        static const char* pool[3] = {"93.184.216.34", "198.18.1.50", "104.16.1.9"};
        int sessions = 6 * slots;
        std::int64_t g = span_gap(sessions);
        for (int j = 0; j < sessions; ++j) {
            auto site = b.sock(pool[j % 3], 443);
            b.connect(firefox, site, 0);
            b.recv(firefox, site, 15000, 0);  // Untrusted_Read
            b.send(firefox, site, 500, 0);    // CnC pattern
            auto cache = b.file("/home/user/.cache/mozilla/c" + std::to_string(j));
            b.write(firefox, cache, 8000, 0);
            if (j % 4 == 3) b.unlink(firefox, cache, 0);  // Untrusted_File_RM pattern
            if (j == sessions - 1) {
                // One visit to a seed-specific address the model never saw.
                auto novel = b.sock("185." + std::to_string(seed % 200) + ".7.9", 443);
                b.connect(firefox, novel, 0);
                b.recv(firefox, novel, 9000, 0);
            }
            b.at(t0 + 1000 + (j + 1) * g);
        }
        auto ev = b.take_events();
        all.insert(all.end(), ev.begin(), ev.end());
    }

    if (profile.maildaemon) {
        TraceBuilder b(profile.host, seed ^ 0x33, t0 + 2000);
        auto postfix = b.proc(600, "/usr/libexec/postfix/smtpd");
        auto spool = b.file("/var/spool/mail/user");
        int mails = 2 * slots;
        std::int64_t g = span_gap(mails);
        for (int k = 0; k < mails; ++k) {
            auto peer = b.sock("198.18.2.9", 42000 + k);
            b.accept(postfix, peer, 0);
            b.recv(postfix, peer, 3000, 0);  // Untrusted_Read
            b.write(postfix, spool, 3000, 0);
            b.at(t0 + 2000 + (k + 1) * g);
        }
        auto ev = b.take_events();
        all.insert(all.end(), ev.begin(), ev.end());
    }

    if (profile.shell_admin) {
        TraceBuilder b(profile.host, seed ^ 0x44, t0 + 3000);
        auto sshd = b.proc(700, "/usr/sbin/sshd");
        int sessions = 2;
        std::int64_t g = span_gap(sessions);
        for (int k = 0; k < sessions; ++k) {
            b.at(t0 + 3000 + k * g + g / 2);
            auto admin = b.sock("203.0.113.10", 50000 + k);
            b.accept(sshd, admin, 0);
            b.recv(sshd, admin, 4096, 0);  // Untrusted_Read (external admin)
            auto bash = b.proc(7000 + k, "/usr/sbin/sshd");
            b.fork(sshd, bash, 0);
            b.exec(bash, "/bin/bash", 0);  // Shell_Exec pattern
            b.read(bash, b.file("/etc/profile"), 1024, 0);
            auto sudo = b.proc(7100 + k, "/bin/bash");
            b.fork(bash, sudo, 0);
            b.exec(sudo, "/usr/bin/sudo", 0);  // Sudo_Exec pattern
            b.read(sudo, b.file("/etc/passwd"), 2048, 0);  // Sensitive_Read pattern
            auto netstat = b.proc(7200 + k, "/usr/bin/netstat", "netstat");
            b.fork(bash, netstat, 0);  // Sensitive_Command pattern
            auto netout = b.file("/tmp/net.out");
            b.write(netstat, netout, 512, 0);
            b.read(bash, netout, 512, 0);
            b.send(bash, admin, 1024, 0);     // CnC + Sensitive_Leak pattern
            b.unlink(bash, netout, 0);        // cleanup patterns
        }
        auto ev = b.take_events();
        all.insert(all.end(), ev.begin(), ev.end());
    }

    if (profile.webserver) {
        // syslog writer plus a log rotation pass (cross-tree file flows).
        TraceBuilder b(profile.host, seed ^ 0x55, t0 + 4000);
        auto syslogd = b.proc(300, "/usr/sbin/syslogd");
        auto syslog = b.file("/var/log/syslog");
        int lines = 2 * slots;
        std::int64_t g = span_gap(lines);
        for (int k = 0; k < lines; ++k) {
            b.write(syslogd, syslog, 200, 0);
            b.at(t0 + 4000 + (k + 1) * g);
        }
        b.at(t0 + duration_us * 7 / 10);
        auto logrotate = b.proc(400, "/usr/sbin/logrotate");
        b.read(logrotate, syslog, 4000, 0);
        b.write(logrotate, b.file("/var/log/syslog.1"), 4000, 0);
        auto ev = b.take_events();
        all.insert(all.end(), ev.begin(), ev.end());
    }

    std::stable_sort(all.begin(), all.end(),
                     [](const Event& a, const Event& b) { return a.ts < b.ts; });
    std::uint64_t seq = 0;
    for (Event& e : all) e.seq = ++seq;
    return all;
}

// Merges attack events into benign background, re-sequencing the result and
// emitting ground truth for the attack events.
inline Interleaved interleave(const std::vector<Event>& benign, const Scenario& attack) {
    struct Tagged {
        Event e;
        int stage;
        bool is_attack;
        std::size_t src_order;
    };
    std::vector<Tagged> all;
    all.reserve(benign.size() + attack.events.size());
    for (std::size_t i = 0; i < benign.size(); ++i)
        all.push_back({benign[i], 0, false, i});
    for (std::size_t i = 0; i < attack.events.size(); ++i)
        all.push_back({attack.events[i], attack.stage_of[i], true, i});
    std::stable_sort(all.begin(), all.end(), [](const Tagged& a, const Tagged& b) {
        if (a.e.ts != b.e.ts) return a.e.ts < b.e.ts;
        if (a.e.host_id != b.e.host_id) return a.e.host_id < b.e.host_id;
        return a.is_attack < b.is_attack;
    });
    Interleaved out;
    std::uint64_t seq = 0;
    for (auto& t : all) {
        t.e.seq = ++seq;
        out.events.push_back(t.e);
        if (t.is_attack && t.stage > 0)
            out.truth.push_back({seq, "attack", attack.name, t.stage});
    }
    return out;
}

// Picks an attack start time inside the benign span so scenario steps mix
// with background activity.
inline Scenario gen_scenario_within(const std::string& name, std::uint64_t seed,
                                    const std::vector<Event>& benign) {
    std::int64_t start = benign.empty() ? 1'600'000'000'000'000
                                        : benign.front().ts +
                                              (benign.back().ts - benign.front().ts) / 3;
    return gen_scenario(name, seed, start);
}

}  // namespace killchain
