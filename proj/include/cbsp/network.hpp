#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace cbsp {

enum class NodeKind { Junction, Reservoir, Tank };
enum class LinkKind { Pipe, Pump, Valve };

using NodeId = std::string;
using LinkId = std::string;

const char* to_string(NodeKind k);
const char* to_string(LinkKind k);

struct TankGeometry {
    double min_volume_m3 = 0.0;
    double max_volume_m3 = 0.0;
    bool operator==(const TankGeometry&) const = default;
};

struct Node {
    NodeId id;
    NodeKind kind = NodeKind::Junction;
    double elevation_m = 0.0;
    std::optional<TankGeometry> tank;  // tanks only
    bool operator==(const Node&) const = default;
};

// Geometry and wall-reaction data exist only for pipes; pumps and valves
// carry none of it rather than zeros by convention.
struct PipeProps {
    double length_m = 0.0;
    double radius_m = 0.0;
    double wall_rate_m_per_s = 0.0;      // k_w
    double mass_transfer_m_per_s = 0.0;  // k_f
    bool operator==(const PipeProps&) const = default;
};

struct Link {
    LinkId id;
    LinkKind kind = LinkKind::Pipe;
    int from = -1;  // index into NetworkTopology::nodes()
    int to = -1;
    std::optional<PipeProps> pipe;  // pipes only
    bool operator==(const Link&) const = default;
};

struct TopologyCounts {
    int junctions = 0, reservoirs = 0, tanks = 0;
    int pipes = 0, pumps = 0, valves = 0;
    bool operator==(const TopologyCounts&) const = default;
};

class NetworkTopology {
public:
    NetworkTopology() = default;
    // Validates ids, endpoints and pipe geometry; throws ParseError on the
    // first violation.
    NetworkTopology(std::vector<Node> nodes, std::vector<Link> links,
                    double bulk_rate_per_s);

    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<Link>& links() const { return links_; }
    const Node& node(int i) const { return nodes_[i]; }
    const Link& link(int i) const { return links_[i]; }
    double bulk_rate_per_s() const { return bulk_rate_; }

    int node_index(const NodeId& id) const;  // -1 when absent
    int link_index(const LinkId& id) const;

    // Links whose declared `to` / `from` endpoint is `node`.
    const std::vector<int>& links_in(int node) const { return in_links_[node]; }
    const std::vector<int>& links_out(int node) const { return out_links_[node]; }
    // Both of the above concatenated at construction time.
    const std::vector<int>& links_at(int node) const { return all_links_[node]; }

    TopologyCounts counts() const;
    bool weakly_connected() const;

    nlohmann::ordered_json to_json() const;
    static NetworkTopology from_json(const nlohmann::json& j);

    // Field-by-field equality of nodes, links and the bulk rate; parse
    // warnings are deliberately ignored.
    bool same_structure(const NetworkTopology& other) const;

    // Non-fatal oddities found while parsing (skipped sections, disconnected
    // components, ...).
    std::vector<std::string> warnings;

private:
    std::vector<Node> nodes_;
    std::vector<Link> links_;
    double bulk_rate_ = 0.0;
    std::vector<std::vector<int>> in_links_, out_links_, all_links_;
    std::unordered_map<std::string, int> node_by_id_, link_by_id_;

    void build_index();
};

// Parser for the EPANET INP subset we consume: [JUNCTIONS] [RESERVOIRS]
// [TANKS] [PIPES] [PUMPS] [VALVES] [OPTIONS] [REACTIONS].  Everything is
// normalized to SI (metres, cubic metres, seconds) on the way in and pipe
// diameters are halved into radii.
NetworkTopology parse_inp(std::istream& in);
NetworkTopology parse_inp_text(const std::string& text);
NetworkTopology parse_inp_file(const std::string& path);

}  // namespace cbsp
