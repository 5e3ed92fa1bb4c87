#include "cbsp/network.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <queue>
#include <sstream>

#include "cbsp/errors.hpp"

namespace cbsp {

const char* to_string(NodeKind k) {
    switch (k) {
        case NodeKind::Junction: return "junction";
        case NodeKind::Reservoir: return "reservoir";
        case NodeKind::Tank: return "tank";
    }
    return "?";
}

const char* to_string(LinkKind k) {
    switch (k) {
        case LinkKind::Pipe: return "pipe";
        case LinkKind::Pump: return "pump";
        case LinkKind::Valve: return "valve";
    }
    return "?";
}

NetworkTopology::NetworkTopology(std::vector<Node> nodes, std::vector<Link> links,
                                 double bulk_rate_per_s)
    : nodes_(std::move(nodes)), links_(std::move(links)), bulk_rate_(bulk_rate_per_s) {
    build_index();
}

void NetworkTopology::build_index() {
    node_by_id_.clear();
    link_by_id_.clear();
    for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
        const Node& n = nodes_[i];
        if (n.id.empty()) throw ParseError("node with empty id");
        if (!node_by_id_.emplace(n.id, i).second)
            throw ParseError("duplicate node id '" + n.id + "'");
        if (n.kind == NodeKind::Tank) {
            if (!n.tank) throw ParseError("tank '" + n.id + "' has no geometry");
            if (n.tank->max_volume_m3 < n.tank->min_volume_m3 || n.tank->min_volume_m3 < 0.0)
                throw ParseError("tank '" + n.id + "' has inverted or negative volume bounds");
        } else if (n.tank) {
            throw ParseError("non-tank node '" + n.id + "' carries tank geometry");
        }
    }
    for (int i = 0; i < static_cast<int>(links_.size()); ++i) {
        const Link& l = links_[i];
        if (l.id.empty()) throw ParseError("link with empty id");
        if (!link_by_id_.emplace(l.id, i).second)
            throw ParseError("duplicate link id '" + l.id + "'");
        if (l.from < 0 || l.from >= static_cast<int>(nodes_.size()) ||
            l.to < 0 || l.to >= static_cast<int>(nodes_.size()))
            throw ParseError("link '" + l.id + "' references a node outside the node set");
        if (l.from == l.to)
            throw ParseError("link '" + l.id + "' is a self loop");
        if (l.kind == LinkKind::Pipe) {
            if (!l.pipe) throw ParseError("pipe '" + l.id + "' has no geometry");
            if (!(l.pipe->length_m > 0.0))
                throw ParseError("pipe '" + l.id + "' has nonpositive length");
            if (!(l.pipe->radius_m > 0.0))
                throw ParseError("pipe '" + l.id + "' has nonpositive diameter");
        } else if (l.pipe) {
            throw ParseError("non-pipe link '" + l.id + "' carries pipe geometry");
        }
    }
    in_links_.assign(nodes_.size(), {});
    out_links_.assign(nodes_.size(), {});
    all_links_.assign(nodes_.size(), {});
    for (int i = 0; i < static_cast<int>(links_.size()); ++i) {
        out_links_[links_[i].from].push_back(i);
        in_links_[links_[i].to].push_back(i);
    }
    for (size_t n = 0; n < nodes_.size(); ++n) {
        all_links_[n] = in_links_[n];
        all_links_[n].insert(all_links_[n].end(), out_links_[n].begin(), out_links_[n].end());
        std::sort(all_links_[n].begin(), all_links_[n].end());
    }
}

int NetworkTopology::node_index(const NodeId& id) const {
    auto it = node_by_id_.find(id);
    return it == node_by_id_.end() ? -1 : it->second;
}

int NetworkTopology::link_index(const LinkId& id) const {
    auto it = link_by_id_.find(id);
    return it == link_by_id_.end() ? -1 : it->second;
}

TopologyCounts NetworkTopology::counts() const {
    TopologyCounts c;
    for (const Node& n : nodes_) {
        switch (n.kind) {
            case NodeKind::Junction: ++c.junctions; break;
            case NodeKind::Reservoir: ++c.reservoirs; break;
            case NodeKind::Tank: ++c.tanks; break;
        }
    }
    for (const Link& l : links_) {
        switch (l.kind) {
            case LinkKind::Pipe: ++c.pipes; break;
            case LinkKind::Pump: ++c.pumps; break;
            case LinkKind::Valve: ++c.valves; break;
        }
    }
    return c;
}

bool NetworkTopology::weakly_connected() const {
    if (nodes_.empty()) return true;
    std::vector<char> seen(nodes_.size(), 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    size_t reached = 1;
    while (!q.empty()) {
        int n = q.front();
        q.pop();
        for (int li : all_links_[n]) {
            const Link& l = links_[li];
            int other = l.from == n ? l.to : l.from;
            if (!seen[other]) {
                seen[other] = 1;
                ++reached;
                q.push(other);
            }
        }
    }
    return reached == nodes_.size();
}

nlohmann::ordered_json NetworkTopology::to_json() const {
    nlohmann::ordered_json j;
    j["bulk_rate_per_s"] = bulk_rate_;
    j["nodes"] = nlohmann::ordered_json::array();
    for (const Node& n : nodes_) {
        nlohmann::ordered_json jn;
        jn["id"] = n.id;
        jn["kind"] = to_string(n.kind);
        jn["elevation_m"] = n.elevation_m;
        if (n.tank) {
            jn["min_volume_m3"] = n.tank->min_volume_m3;
            jn["max_volume_m3"] = n.tank->max_volume_m3;
        }
        j["nodes"].push_back(std::move(jn));
    }
    j["links"] = nlohmann::ordered_json::array();
    for (const Link& l : links_) {
        nlohmann::ordered_json jl;
        jl["id"] = l.id;
        jl["kind"] = to_string(l.kind);
        jl["from"] = nodes_[l.from].id;
        jl["to"] = nodes_[l.to].id;
        if (l.pipe) {
            jl["length_m"] = l.pipe->length_m;
            jl["radius_m"] = l.pipe->radius_m;
            jl["wall_rate_m_per_s"] = l.pipe->wall_rate_m_per_s;
            jl["mass_transfer_m_per_s"] = l.pipe->mass_transfer_m_per_s;
        }
        j["links"].push_back(std::move(jl));
    }
    return j;
}

NetworkTopology NetworkTopology::from_json(const nlohmann::json& j) {
    std::vector<Node> nodes;
    std::vector<Link> links;
    std::unordered_map<std::string, int> by_id;
    for (const auto& jn : j.at("nodes")) {
        Node n;
        n.id = jn.at("id").get<std::string>();
        std::string kind = jn.at("kind").get<std::string>();
        if (kind == "junction") n.kind = NodeKind::Junction;
        else if (kind == "reservoir") n.kind = NodeKind::Reservoir;
        else if (kind == "tank") n.kind = NodeKind::Tank;
        else throw ParseError("unknown node kind '" + kind + "'");
        n.elevation_m = jn.at("elevation_m").get<double>();
        if (n.kind == NodeKind::Tank) {
            n.tank = TankGeometry{jn.at("min_volume_m3").get<double>(),
                                  jn.at("max_volume_m3").get<double>()};
        }
        by_id.emplace(n.id, static_cast<int>(nodes.size()));
        nodes.push_back(std::move(n));
    }
    for (const auto& jl : j.at("links")) {
        Link l;
        l.id = jl.at("id").get<std::string>();
        std::string kind = jl.at("kind").get<std::string>();
        if (kind == "pipe") l.kind = LinkKind::Pipe;
        else if (kind == "pump") l.kind = LinkKind::Pump;
        else if (kind == "valve") l.kind = LinkKind::Valve;
        else throw ParseError("unknown link kind '" + kind + "'");
        auto from = by_id.find(jl.at("from").get<std::string>());
        auto to = by_id.find(jl.at("to").get<std::string>());
        if (from == by_id.end() || to == by_id.end())
            throw ParseError("link '" + l.id + "' references an unknown node");
        l.from = from->second;
        l.to = to->second;
        if (l.kind == LinkKind::Pipe) {
            l.pipe = PipeProps{jl.at("length_m").get<double>(),
                               jl.at("radius_m").get<double>(),
                               jl.at("wall_rate_m_per_s").get<double>(),
                               jl.at("mass_transfer_m_per_s").get<double>()};
        }
        links.push_back(std::move(l));
    }
    return NetworkTopology(std::move(nodes), std::move(links),
                           j.at("bulk_rate_per_s").get<double>());
}

bool NetworkTopology::same_structure(const NetworkTopology& other) const {
    return nodes_ == other.nodes_ && links_ == other.links_ && bulk_rate_ == other.bulk_rate_;
}

namespace {

// ---- INP tokenizing -------------------------------------------------------

struct RawLine {
    int line_no;
    std::vector<std::string> tokens;
};

std::string upper(std::string s) {
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

double number(const std::string& tok, int line) {
    const char* begin = tok.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        throw ParseError("malformed number '" + tok + "'", line);
    return v;
}

// Unit handling: EPANET flow-unit keywords decide whether the file is US
// customary or metric, which fixes the length units below.
struct Units {
    bool us = true;  // EPANET's default (GPM)
    double elevation() const { return us ? 0.3048 : 1.0; }      // ft|m -> m
    double pipe_diameter() const { return us ? 0.0254 : 1e-3; } // in|mm -> m
    double tank_diameter() const { return us ? 0.3048 : 1.0; }  // ft|m -> m
    double length() const { return us ? 0.3048 : 1.0; }         // ft|m -> m
    double wall_rate() const { return (us ? 0.3048 : 1.0) / 86400.0; }  // per day -> per s
};

struct Sections {
    std::vector<RawLine> junctions, reservoirs, tanks, pipes, pumps, valves, options, reactions;
};

}  // namespace

NetworkTopology parse_inp(std::istream& in) {
    Sections sec;
    std::vector<std::string> warnings;
    std::vector<RawLine>* current = nullptr;
    bool current_known = true;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto pos = line.find(';'); pos != std::string::npos) line.erase(pos);
        std::istringstream ls(line);
        std::vector<std::string> toks;
        for (std::string t; ls >> t;) toks.push_back(t);
        if (toks.empty()) continue;
        if (toks[0].front() == '[') {
            std::string name = upper(toks[0]);
            if (auto close = name.find(']'); close != std::string::npos)
                name = name.substr(1, close - 1);
            else
                throw ParseError("unterminated section header", line_no);
            current = nullptr;
            current_known = true;
            if (name == "JUNCTIONS") current = &sec.junctions;
            else if (name == "RESERVOIRS") current = &sec.reservoirs;
            else if (name == "TANKS") current = &sec.tanks;
            else if (name == "PIPES") current = &sec.pipes;
            else if (name == "PUMPS") current = &sec.pumps;
            else if (name == "VALVES") current = &sec.valves;
            else if (name == "OPTIONS") current = &sec.options;
            else if (name == "REACTIONS") current = &sec.reactions;
            else if (name == "TITLE" || name == "END") current_known = true;
            else {
                current_known = false;
                warnings.push_back("skipped unrecognized section [" + name + "]");
            }
            continue;
        }
        if (current) current->push_back({line_no, std::move(toks)});
        // Lines in [TITLE] or in unrecognized sections are dropped.
        (void)current_known;
    }

    Units units;
    for (const RawLine& r : sec.options) {
        if (upper(r.tokens[0]) == "UNITS" && r.tokens.size() >= 2) {
            std::string u = upper(r.tokens[1]);
            if (u == "CFS" || u == "GPM" || u == "MGD" || u == "IMGD" || u == "AFD")
                units.us = true;
            else if (u == "LPS" || u == "LPM" || u == "MLD" || u == "CMH" ||
                     u == "CMD" || u == "CMS")
                units.us = false;
            else
                throw ParseError("unknown flow units '" + r.tokens[1] + "'", r.line_no);
        }
    }

    std::vector<Node> nodes;
    std::vector<Link> links;
    auto need = [](const RawLine& r, size_t n, const char* what) {
        if (r.tokens.size() < n)
            throw ParseError(std::string("expected at least ") + std::to_string(n) +
                                 " fields for " + what,
                             r.line_no);
    };

    for (const RawLine& r : sec.junctions) {
        need(r, 2, "a junction");
        Node n;
        n.id = r.tokens[0];
        n.kind = NodeKind::Junction;
        n.elevation_m = number(r.tokens[1], r.line_no) * units.elevation();
        nodes.push_back(std::move(n));
    }
    for (const RawLine& r : sec.reservoirs) {
        need(r, 2, "a reservoir");
        Node n;
        n.id = r.tokens[0];
        n.kind = NodeKind::Reservoir;
        n.elevation_m = number(r.tokens[1], r.line_no) * units.elevation();
        nodes.push_back(std::move(n));
    }
    for (const RawLine& r : sec.tanks) {
        // id elev init-level min-level max-level diameter ...
        need(r, 6, "a tank");
        Node n;
        n.id = r.tokens[0];
        n.kind = NodeKind::Tank;
        n.elevation_m = number(r.tokens[1], r.line_no) * units.elevation();
        double min_lvl = number(r.tokens[3], r.line_no) * units.elevation();
        double max_lvl = number(r.tokens[4], r.line_no) * units.elevation();
        double diam = number(r.tokens[5], r.line_no) * units.tank_diameter();
        if (!(diam > 0.0)) throw ParseError("tank '" + n.id + "' has nonpositive diameter", r.line_no);
        if (max_lvl < min_lvl || min_lvl < 0.0)
            throw ParseError("tank '" + n.id + "' has inverted or negative levels", r.line_no);
        double area = 3.14159265358979323846 * 0.25 * diam * diam;
        n.tank = TankGeometry{area * min_lvl, area * max_lvl};
        nodes.push_back(std::move(n));
    }

    std::unordered_map<std::string, int> node_by_id;
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
        if (!node_by_id.emplace(nodes[i].id, i).second)
            throw ParseError("duplicate node id '" + nodes[i].id + "'");
    }
    auto node_of = [&](const std::string& id, int line) {
        auto it = node_by_id.find(id);
        if (it == node_by_id.end())
            throw ParseError("unknown node '" + id + "'", line);
        return it->second;
    };

    for (const RawLine& r : sec.pipes) {
        // id node1 node2 length diameter ...
        need(r, 5, "a pipe");
        Link l;
        l.id = r.tokens[0];
        l.kind = LinkKind::Pipe;
        l.from = node_of(r.tokens[1], r.line_no);
        l.to = node_of(r.tokens[2], r.line_no);
        double length = number(r.tokens[3], r.line_no) * units.length();
        double diam = number(r.tokens[4], r.line_no) * units.pipe_diameter();
        if (!(length > 0.0))
            throw ParseError("pipe '" + l.id + "' has nonpositive length", r.line_no);
        if (!(diam > 0.0))
            throw ParseError("pipe '" + l.id + "' has nonpositive diameter", r.line_no);
        l.pipe = PipeProps{length, diam * 0.5, 0.0, 0.0};
        links.push_back(std::move(l));
    }
    for (const RawLine& r : sec.pumps) {
        need(r, 3, "a pump");
        Link l;
        l.id = r.tokens[0];
        l.kind = LinkKind::Pump;
        l.from = node_of(r.tokens[1], r.line_no);
        l.to = node_of(r.tokens[2], r.line_no);
        links.push_back(std::move(l));
    }
    for (const RawLine& r : sec.valves) {
        need(r, 3, "a valve");
        Link l;
        l.id = r.tokens[0];
        l.kind = LinkKind::Valve;
        l.from = node_of(r.tokens[1], r.line_no);
        l.to = node_of(r.tokens[2], r.line_no);
        links.push_back(std::move(l));
    }

    std::unordered_map<std::string, int> link_by_id;
    for (int i = 0; i < static_cast<int>(links.size()); ++i) link_by_id.emplace(links[i].id, i);
    auto pipe_of = [&](const std::string& id, int line) -> Link& {
        auto it = link_by_id.find(id);
        if (it == link_by_id.end())
            throw ParseError("unknown link '" + id + "' in [REACTIONS]", line);
        Link& l = links[it->second];
        if (l.kind != LinkKind::Pipe)
            throw ParseError("link '" + id + "' in [REACTIONS] is not a pipe", line);
        return l;
    };

    double bulk_rate = 0.0;
    double global_wall = 0.0, global_kf = 0.0;
    std::unordered_map<int, double> pipe_wall, pipe_kf;  // per-pipe overrides
    for (const RawLine& r : sec.reactions) {
        std::string kw = upper(r.tokens[0]);
        if (kw == "GLOBAL") {
            need(r, 3, "a GLOBAL reaction entry");
            std::string what = upper(r.tokens[1]);
            double v = number(r.tokens[2], r.line_no);
            if (what == "BULK") bulk_rate = v / 86400.0;           // 1/day -> 1/s
            else if (what == "WALL") global_wall = v * units.wall_rate();
            else if (what == "KF") global_kf = v * units.wall_rate();
            // ORDER etc. are irrelevant to first-order decay; ignore.
        } else if (kw == "WALL") {
            need(r, 3, "a WALL reaction entry");
            int li = static_cast<int>(&pipe_of(r.tokens[1], r.line_no) - links.data());
            pipe_wall[li] = number(r.tokens[2], r.line_no) * units.wall_rate();
        } else if (kw == "KF") {
            need(r, 3, "a KF reaction entry");
            int li = static_cast<int>(&pipe_of(r.tokens[1], r.line_no) - links.data());
            pipe_kf[li] = number(r.tokens[2], r.line_no) * units.wall_rate();
        } else if (kw == "BULK") {
            warnings.push_back("per-pipe BULK coefficient ignored (bulk rate is network-wide)");
        }
        // LIMITING / ORDER / TANK entries are outside the modeled subset.
    }
    for (int i = 0; i < static_cast<int>(links.size()); ++i) {
        if (links[i].kind != LinkKind::Pipe) continue;
        auto w = pipe_wall.find(i);
        auto f = pipe_kf.find(i);
        links[i].pipe->wall_rate_m_per_s = w != pipe_wall.end() ? w->second : global_wall;
        links[i].pipe->mass_transfer_m_per_s = f != pipe_kf.end() ? f->second : global_kf;
    }

    NetworkTopology topo(std::move(nodes), std::move(links), bulk_rate);
    topo.warnings = std::move(warnings);
    if (!topo.weakly_connected())
        topo.warnings.push_back("network is not weakly connected");
    return topo;
}

NetworkTopology parse_inp_text(const std::string& text) {
    std::istringstream in(text);
    return parse_inp(in);
}

NetworkTopology parse_inp_file(const std::string& path) {
    std::ifstream in(path);
    // Unreadable is an environment problem, not a syntax problem.
    if (!in) throw Error("cannot open '" + path + "'");
    return parse_inp(in);
}

}  // namespace cbsp
