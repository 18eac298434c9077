// provgraph.hpp — in-memory versioned provenance graph. Edges are oriented
// along information flow / causality. A node version receives incoming edges
// only at creation time: an incoming edge that would not add any new
// graph-ancestor is pruned, and every materialized incoming edge onto an
// existing node first creates a new version of it. The versioned graph is
// therefore acyclic by construction and every node version's ancestor set is
// fixed once created.

#pragma once

#include <cassert>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "killchain/cdr.hpp"
#include "killchain/detail/patricia.hpp"

namespace killchain {

using BaseId = std::uint32_t;
using NodeRef = std::uint32_t;
constexpr NodeRef kNoNode = 0xffffffff;
constexpr BaseId kNoBase = 0xffffffff;

struct NodeId {
    BaseId base;
    std::uint32_t version;
};

struct ProvEdge {
    NodeRef src;
    NodeRef dst;
    Family family;
    bool version_edge;  // carries a base entity's state to its next version
    std::int64_t ts;
    std::uint64_t bytes;
    std::uint64_t event_seq;
};

struct GraphDelta {
    std::vector<NodeRef> new_nodes;
    std::vector<std::uint32_t> new_edges;  // in application order
    std::uint32_t versions_created = 0;
    bool pruned = false;  // event edge added no new dependence
};

struct BaseEntity {
    EntityKind kind;
    std::string host_id;
    std::string local_id;
    std::map<std::string, std::string> attrs;
    NodeRef current = kNoNode;
    std::uint32_t version_count = 0;
    // Fork/exec lineage, process bases only.
    BaseId proc_parent = kNoBase;
    BaseId proc_root = kNoBase;

    std::string attr(const std::string& key) const {
        auto it = attrs.find(key);
        return it == attrs.end() ? std::string() : it->second;
    }

    // Short human name used by rule predicates and exports.
    std::string name() const {
        if (auto it = attrs.find("name"); it != attrs.end()) return it->second;
        if (kind == EntityKind::Socket) return attr("ip") + ":" + attr("port");
        std::string path;
        if (kind == EntityKind::Process) path = attr("exe_path");
        else path = local_id;
        auto slash = path.find_last_of("/\\");
        return slash == std::string::npos ? path : path.substr(slash + 1);
    }
};

class ProvGraph {
public:
    struct Node {
        BaseId base;
        std::uint32_t version;
        std::uint32_t anc;  // patricia set of ancestor NodeRefs (excl. self)
    };

    // --- lookups -----------------------------------------------------------

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }

    std::size_t flow_edge_count() const {
        std::size_t n = 0;
        for (const auto& e : edges_)
            if (!e.version_edge) ++n;
        return n;
    }

    const Node& node(NodeRef n) const { return nodes_[n]; }
    const ProvEdge& edge(std::uint32_t i) const { return edges_[i]; }
    const BaseEntity& base(BaseId b) const { return bases_[b]; }
    std::size_t base_count() const { return bases_.size(); }
    const std::vector<std::uint32_t>& out_edges(NodeRef n) const { return out_edges_[n]; }

    NodeRef current(BaseId b) const { return bases_[b].current; }

    std::optional<BaseId> find_base(EntityKind kind, const std::string& host,
                                    const std::string& local) const {
        auto it = base_index_.find(std::tie(kind, host, local));
        if (it == base_index_.end()) return std::nullopt;
        return it->second;
    }

    bool is_process(NodeRef n) const {
        return bases_[nodes_[n].base].kind == EntityKind::Process;
    }

    NodeId id_of(NodeRef n) const { return {nodes_[n].base, nodes_[n].version}; }

    // --- process lineage ---------------------------------------------------

    BaseId tree_root(BaseId b) const { return bases_[b].proc_root; }

    // Transitive fork/exec parents, including self.
    std::vector<BaseId> proc_ancestors(BaseId b) const {
        std::vector<BaseId> out;
        for (BaseId p = b; p != kNoBase; p = bases_[p].proc_parent) out.push_back(p);
        return out;
    }

    // --- versioning --------------------------------------------------------

    bool anc_contains(NodeRef t, NodeRef s) const {
        return ancpool_.contains(nodes_[t].anc, s);
    }

    // True iff adding edge (incoming_src -> target) would grow target's set
    // of graph ancestors, i.e. the source does not already reach the target.
    bool needs_new_version(NodeRef target, NodeRef incoming_src) const {
        return incoming_src != target && !anc_contains(target, incoming_src);
    }

    std::vector<NodeRef> ancestor_set(NodeRef n) const {
        std::vector<NodeRef> out;
        ancpool_.for_each(nodes_[n].anc, [&](std::uint32_t k, std::uint32_t) {
            out.push_back(k);
            return true;
        });
        return out;
    }

    // --- construction ------------------------------------------------------

    // The flow source is materialized before the destination so node indices
    // stay a topological order of the versioned DAG.
    GraphDelta add_event(const Event& e) {
        GraphDelta delta;
        fresh_.clear();

        switch (e.family) {
            case Family::READ:
            case Family::RECV:
            case Family::CONNECT:
            case Family::ACCEPT: {
                BaseId ob = ensure_base(e.object, delta);
                merge_attrs(ob, e.object.attrs);
                BaseId sb = ensure_base(e.subject, delta);
                merge_attrs(sb, e.subject.attrs);
                add_flow(ob, sb, e, delta);
                break;
            }
            case Family::SETUID: {
                BaseId ob = ensure_base(e.object, delta);
                merge_attrs(ob, e.object.attrs);
                BaseId sb = ensure_base(e.subject, delta);
                merge_attrs(sb, e.subject.attrs);
                if (auto it = e.aux.find("uid"); it != e.aux.end())
                    bases_[sb].attrs["uid"] = it->second;
                else if (!e.object.attr("uid").empty())
                    bases_[sb].attrs["uid"] = e.object.attr("uid");
                add_flow(ob, sb, e, delta);
                break;
            }
            case Family::EXEC: {
                std::string image = exec_image_of(e);
                EntityRef file;
                file.kind = EntityKind::File;
                file.host_id = e.host_id;
                file.local_id = image;
                BaseId fb = ensure_base(file, delta);
                BaseId sb = ensure_base(e.subject, delta);
                merge_attrs(sb, e.subject.attrs);
                bases_[sb].attrs["exe_path"] = image;
                bases_[sb].attrs.erase("name");
                add_flow(fb, sb, e, delta);
                break;
            }
            case Family::FORK: {
                BaseId sb = ensure_base(e.subject, delta);
                merge_attrs(sb, e.subject.attrs);
                BaseId cb = ensure_base(e.object, delta);
                merge_attrs(cb, e.object.attrs);
                if (bases_[cb].proc_parent == kNoBase && cb != sb &&
                    bases_[cb].proc_root == cb) {
                    bases_[cb].proc_parent = sb;
                    bases_[cb].proc_root = bases_[sb].proc_root;
                }
                add_flow(sb, cb, e, delta);
                break;
            }
            case Family::WRITE:
            case Family::SEND:
            case Family::MPROTECT:
            case Family::CHMOD:
            case Family::UNLINK: {
                BaseId sb = ensure_base(e.subject, delta);
                merge_attrs(sb, e.subject.attrs);
                BaseId ob = ensure_base(e.object, delta);
                merge_attrs(ob, e.object.attrs);
                add_flow(sb, ob, e, delta);
                break;
            }
        }
        return delta;
    }

    // File node a rule binds for an EXEC event.
    static std::string exec_image_of(const Event& e) {
        if (auto it = e.aux.find("exe"); it != e.aux.end()) return it->second;
        return e.object.attr("exe_path");
    }

    // --- test/debug oracles ------------------------------------------------

    // Exact reachability-based ancestor sets by brute force. Test-scale only.
    std::map<NodeRef, std::set<NodeRef>> graph_ancestor_sets() const {
        std::map<NodeRef, std::set<NodeRef>> anc;
        for (NodeRef n = 0; n < nodes_.size(); ++n) anc[n] = {};
        // Node indices are a topological order: every edge goes old -> new.
        for (NodeRef n = 0; n < nodes_.size(); ++n) {
            for (std::uint32_t ei : out_edges_[n]) {
                const ProvEdge& e = edges_[ei];
                anc[e.dst].insert(n);
                anc[e.dst].insert(anc[n].begin(), anc[n].end());
            }
        }
        return anc;
    }

    // --- export ------------------------------------------------------------

    std::string to_dot() const {
        std::ostringstream os;
        os << "digraph provenance {\n  rankdir=LR;\n";
        for (NodeRef n = 0; n < nodes_.size(); ++n) {
            const auto& b = bases_[nodes_[n].base];
            os << "  n" << n << " [shape=" << shape_of(b.kind) << ", label=\""
               << escape(node_label(n)) << "\"];\n";
        }
        for (const auto& e : edges_) {
            os << "  n" << e.src << " -> n" << e.dst << " [label=\""
               << (e.version_edge ? "VERSION" : to_string(e.family)) << "\"";
            if (e.version_edge) os << ", style=dashed";
            os << "];\n";
        }
        os << "}\n";
        return os.str();
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["nodes"] = nlohmann::ordered_json::array();
        for (NodeRef n = 0; n < nodes_.size(); ++n) {
            const auto& node = nodes_[n];
            const auto& b = bases_[node.base];
            nlohmann::ordered_json nj;
            nj["id"] = n;
            nj["kind"] = to_string(b.kind);
            nj["entity"] = b.local_id;
            nj["host"] = b.host_id;
            nj["version"] = node.version;
            nj["attrs"] = b.attrs;
            j["nodes"].push_back(std::move(nj));
        }
        j["edges"] = nlohmann::ordered_json::array();
        for (const auto& e : edges_) {
            nlohmann::ordered_json ej;
            ej["src"] = e.src;
            ej["dst"] = e.dst;
            ej["family"] = e.version_edge ? "VERSION" : to_string(e.family);
            ej["ts"] = e.ts;
            ej["bytes"] = e.bytes;
            j["edges"].push_back(std::move(ej));
        }
        return j;
    }

    std::string node_label(NodeRef n) const {
        const auto& node = nodes_[n];
        const auto& b = bases_[node.base];
        std::string label;
        switch (b.kind) {
            case EntityKind::Process:
                label = b.name() + " [" + b.local_id + "]";
                break;
            case EntityKind::Socket:
                label = b.attr("ip") + ":" + b.attr("port");
                break;
            case EntityKind::User:
                label = "uid " + b.attr("uid");
                break;
            default:
                label = b.local_id;
        }
        return label + " v" + std::to_string(node.version);
    }

private:
    friend class PathFactorTable;

    static const char* shape_of(EntityKind k) {
        switch (k) {
            case EntityKind::Process: return "rectangle";
            case EntityKind::File: return "oval";
            case EntityKind::Socket: return "diamond";
            case EntityKind::Memory: return "pentagon";
            case EntityKind::User: return "star";
        }
        return "oval";
    }

    static std::string escape(const std::string& s) {
        std::string out;
        for (char c : s) {
            if (c == '"' || c == '\\') out.push_back('\\');
            out.push_back(c);
        }
        return out;
    }

    BaseId ensure_base(const EntityRef& ref, GraphDelta& delta) {
        auto key = std::tuple<EntityKind, std::string, std::string>(
            ref.kind, ref.host_id, ref.local_id);
        if (auto it = base_index_.find(key); it != base_index_.end())
            return it->second;
        BaseId b = static_cast<BaseId>(bases_.size());
        BaseEntity be;
        be.kind = ref.kind;
        be.host_id = ref.host_id;
        be.local_id = ref.local_id;
        if (ref.kind == EntityKind::Process) be.proc_root = b;
        bases_.push_back(std::move(be));
        base_index_.emplace(std::move(key), b);
        new_version(b, delta);
        fresh_.push_back(b);
        return b;
    }

    void merge_attrs(BaseId b, const std::map<std::string, std::string>& attrs) {
        for (const auto& [k, v] : attrs) bases_[b].attrs[k] = v;
    }

    NodeRef new_version(BaseId b, GraphDelta& delta) {
        NodeRef n = static_cast<NodeRef>(nodes_.size());
        nodes_.push_back({b, bases_[b].version_count, detail::PatriciaPool::kEmpty});
        out_edges_.emplace_back();
        bases_[b].current = n;
        bases_[b].version_count++;
        delta.new_nodes.push_back(n);
        return n;
    }

    std::uint32_t push_edge(NodeRef src, NodeRef dst, Family fam, bool version_edge,
                            const Event& e, GraphDelta& delta) {
        assert(src < dst);
        std::uint32_t idx = static_cast<std::uint32_t>(edges_.size());
        edges_.push_back({src, dst, fam, version_edge, e.ts,
                          version_edge ? 0 : e.bytes, e.seq});
        out_edges_[src].push_back(idx);
        delta.new_edges.push_back(idx);
        return idx;
    }

    bool created_this_event(BaseId b) const {
        for (BaseId f : fresh_)
            if (f == b) return true;
        return false;
    }

    void add_flow(BaseId src_base, BaseId dst_base, const Event& e, GraphDelta& delta) {
        if (src_base == dst_base) {
            delta.pruned = true;
            return;
        }
        NodeRef src = bases_[src_base].current;
        NodeRef dst = bases_[dst_base].current;
        if (created_this_event(dst_base)) {
            // Initial incoming edge lands on the fresh version directly.
            nodes_[dst].anc = ancpool_.insert(
                ancpool_.unite(nodes_[dst].anc, nodes_[src].anc,
                               [](std::uint32_t a, std::uint32_t) { return a; }),
                src);
            push_edge(src, dst, e.family, false, e, delta);
            return;
        }
        if (!needs_new_version(dst, src)) {
            delta.pruned = true;
            return;
        }
        NodeRef fresh = new_version(dst_base, delta);
        std::uint32_t with_prev = ancpool_.insert(nodes_[dst].anc, dst);
        std::uint32_t with_src = ancpool_.insert(nodes_[src].anc, src);
        nodes_[fresh].anc = ancpool_.unite(
            with_prev, with_src, [](std::uint32_t a, std::uint32_t) { return a; });
        delta.versions_created++;
        push_edge(dst, fresh, e.family, true, e, delta);
        push_edge(src, fresh, e.family, false, e, delta);
    }

    std::vector<BaseEntity> bases_;
    std::vector<Node> nodes_;
    std::vector<ProvEdge> edges_;
    std::vector<std::vector<std::uint32_t>> out_edges_;
    std::map<std::tuple<EntityKind, std::string, std::string>, BaseId> base_index_;
    detail::PatriciaPool ancpool_;
    std::vector<BaseId> fresh_;  // bases created by the event in flight
};

}  // namespace killchain
