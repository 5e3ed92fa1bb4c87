#include "cbsp/fixtures.hpp"

#include <array>
#include <cmath>
#include <cstdio>

namespace cbsp {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string g17(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Mirrors the INP parser's mm -> radius conversion, so a flow written as
// `v * area(d)` divides back to exactly `v` after the file round-trip.
double area_of_mm(double diam_mm) {
    double r = diam_mm * 1e-3 * 0.5;
    return kPi * r * r;
}

constexpr const char* kCsvHeader = "time_s,element,kind,value\n";

void row(std::string& csv, double t, const std::string& element, const char* kind,
         double value) {
    csv += g17(t);
    csv += ',';
    csv += element;
    csv += ',';
    csv += kind;
    csv += ',';
    csv += g17(value);
    csv += '\n';
}

// ---- three node ------------------------------------------------------------

constexpr double kThreeNodeFillV = 1.0;
constexpr double kThreeNodeDrainV = 0.7;

std::string three_node_csv(int overshoot_hour, int unbalanced_hour) {
    const double area = area_of_mm(160);
    const double q_fill = kThreeNodeFillV * area;
    const double q_drain = kThreeNodeDrainV * area;
    const double d_fill = 0.3 * area;

    std::string csv = kCsvHeader;
    double volume = 800.0;
    for (int h = 0; h < 24; ++h) {
        double t = 3600.0 * h;
        bool fill = h >= 7 && h < 17;
        double pump = fill ? d_fill + q_fill : 0.0;
        double pipe = fill ? q_fill : -q_drain;
        double demand = fill ? d_fill : q_drain;
        if (h == overshoot_hour && !fill) {
            pipe = -150.0 * area;  // 150 m/s crosses the pipe within one step
            demand = 150.0 * area;
        }
        if (h == unbalanced_hour) demand *= 1.5;
        row(csv, t, "PU1", "flow", pump);
        row(csv, t, "P1", "flow", pipe);
        row(csv, t, "J1", "demand", demand);
        row(csv, t, "TK1", "volume", volume);
        volume += (fill ? q_fill : -q_drain) * 3600.0;
    }
    return csv;
}

constexpr const char* kThreeNodeInp = R"([TITLE]
Three-node test network

[JUNCTIONS]
;id    elev
J1     10

[RESERVOIRS]
;id    head
R1     60

[TANKS]
;id    elev  init  min  max  diam
TK1    20    8     2    20   10

[PIPES]
;id    from  to    length  diam
P1     J1    TK1   1000    160

[PUMPS]
;id    from  to
PU1    R1    J1

[OPTIONS]
UNITS  LPS

[REACTIONS]
GLOBAL BULK 0.05
WALL   P1   0.06
KF     P1   0.12

[END]
)";

// ---- ring ------------------------------------------------------------------

constexpr const char* kRingInp = R"([JUNCTIONS]
J1     10

[TANKS]
TK1    10    4    1    15    10

[PIPES]
P1     TK1   J1    600    300
P2     J1    TK1   400    300

[OPTIONS]
UNITS  LPS

[REACTIONS]
GLOBAL BULK 0

[END]
)";

std::string ring_csv() {
    const double q = 0.5 * area_of_mm(300);
    std::string csv = kCsvHeader;
    for (int h = 0; h < 4; ++h) {
        double t = 3600.0 * h;
        row(csv, t, "P1", "flow", q);
        row(csv, t, "P2", "flow", q);
        row(csv, t, "TK1", "volume", 300.0);
    }
    return csv;
}

// ---- nine-junction network ("net1 like") ------------------------------------

constexpr const char* kNet1Inp = R"([TITLE]
Nine-junction looped network with a side tank

[JUNCTIONS]
;id    elev
J1     20
J2     22
J3     24
J4     24
J5     21
J6     23
J7     25
J8     20
J9     22

[RESERVOIRS]
R1     80

[TANKS]
;id    elev  init  min   max  diam
TK1    30    5     0.5   12   16

[PIPES]
;id    from  to    length  diam
P1     J1    J2    90      300
P2     J2    J3    85      250
P3     J3    J4    80      200
P4     J5    J6    75      150
P5     J6    J7    70      150
P6     J8    J9    65      150
P7     TK1   J3    60      200
P8     J2    J5    95      200
P9     J3    J6    70      150
P10    J4    J7    75      150
P11    J5    J8    85      150
P12    J6    J9    70      150

[PUMPS]
PU1    R1    J1

[OPTIONS]
UNITS  LPS

[REACTIONS]
GLOBAL BULK 0.08
GLOBAL WALL 0.05
GLOBAL KF   0.10

[END]
)";

struct Net1Flows {
    std::array<double, 12> pipe{};  // P1..P12
    double pump = 0.0;
    double tank_net = 0.0;  // signed inflow into TK1
};

// d[0..8] are the nine junction draws for this hour, f the tank fill rate.
Net1Flows net1_flows(int variant, bool fill, const std::array<double, 9>& d, double f) {
    Net1Flows r{};
    auto& p = r.pipe;
    const double d1 = d[0], d2 = d[1], d3 = d[2], d4 = d[3], d5 = d[4], d6 = d[5],
                 d7 = d[6], d8 = d[7], d9 = d[8];
    switch (variant) {
        case 1:
            if (fill) {
                p[9] = d7;                 // P10 J4->J7
                p[2] = d4 + d7;            // P3
                p[11] = d9;                // P12
                p[8] = d6 + d9;            // P9
                p[6] = -f;                 // P7 (J3 -> TK1)
                p[1] = d3 + p[2] + p[8] + f;  // P2
                p[10] = d8;                // P11
                p[7] = d5 + d8;            // P8
                p[0] = d2 + p[1] + p[7];   // P1
                r.pump = d1 + p[0];
                r.tank_net = f;
            } else {
                p[9] = d7;
                p[2] = d4 + d7;
                p[6] = d4 + d7;            // P7 drains
                p[11] = d9;
                p[8] = d6 + d9;
                p[1] = d3 + p[8];
                p[10] = d8;
                p[7] = d5 + d8;
                p[0] = d2 + p[1] + p[7];
                r.pump = d1 + p[0];
                r.tank_net = -(d4 + d7);
            }
            break;
        case 2:
            if (fill) {
                p[2] = d4;
                p[4] = d7;                 // P5 J6->J7
                p[11] = d9;
                p[8] = d6 + d7 + d9;
                p[6] = -f;
                p[1] = d3 + p[2] + p[8] + f;
                p[10] = d8;
                p[7] = d5 + d8;
                p[0] = d2 + p[1] + p[7];
                r.pump = d1 + p[0];
                r.tank_net = f;
            } else {
                p[6] = d3 + d4;            // tank covers J3, J4
                p[2] = d4;
                p[4] = d7;
                p[11] = d9;
                p[3] = d6 + d7 + d9;       // P4 J5->J6
                p[10] = d8;
                p[7] = d5 + d8 + p[3];
                p[0] = d2 + p[7];
                r.pump = d1 + p[0];
                r.tank_net = -(d3 + d4);
            }
            break;
        case 3:
            if (fill) {
                p[4] = d7;
                p[11] = d9;
                p[3] = d6 + d7 + d9;       // P4
                p[2] = d4;
                p[6] = -f;
                p[1] = d3 + p[2] + f;
                p[10] = d8;
                p[7] = d5 + d8 + p[3];
                p[0] = d2 + p[1] + p[7];
                r.pump = d1 + p[0];
                r.tank_net = f;
            } else {
                p[4] = d7;
                p[11] = d9;
                p[8] = d6 + d7 + d9;       // P9 carries the tank's water on
                p[2] = d4;
                p[6] = d3 + d4 + d6 + d7 + d9;
                p[10] = d8;
                p[7] = d5 + d8;
                p[0] = d2 + p[7];
                r.pump = d1 + p[0];
                r.tank_net = -(d3 + d4 + d6 + d7 + d9);
            }
            break;
        case 4:
            if (fill) {
                p[5] = d9;                 // P6 J8->J9
                p[10] = d8 + d9;
                p[7] = d5 + d8 + d9;
                p[4] = d7;
                p[8] = d6 + d7;
                p[2] = d4;
                p[6] = -f;
                p[1] = d3 + p[2] + p[8] + f;
                p[0] = d2 + p[1] + p[7];
                r.pump = d1 + p[0];
                r.tank_net = f;
            } else {
                // Pump off; the tank supplies the whole network and the
                // mains P1 and P2 reverse.
                p[5] = d9;
                p[10] = d8 + d9;
                p[7] = d5 + d8 + d9;
                p[4] = d7;
                p[8] = d6 + d7;
                p[2] = d4;
                p[0] = -d1;
                p[1] = -(d1 + d2 + d5 + d8 + d9);
                p[6] = d1 + d2 + d3 + d4 + d5 + d6 + d7 + d8 + d9;
                r.pump = 0.0;
                r.tank_net = -p[6];
            }
            break;
    }
    return r;
}

constexpr std::array<double, 24> kPattern = {0.6, 0.6, 0.7, 0.7, 0.8, 0.9, 1.0, 1.1,
                                             1.2, 1.3, 1.3, 1.2, 1.1, 1.1, 1.0, 1.0,
                                             1.1, 1.2, 1.3, 1.2, 1.0, 0.9, 0.8, 0.7};
constexpr std::array<double, 9> kNet1BaseDemand = {0.006, 0.005,  0.006, 0.0045, 0.005,
                                                   0.0055, 0.004, 0.0035, 0.0045};

struct Net1Variant {
    int fill_begin, fill_end;  // hours [begin, end)
    double fill_rate;
    double demand_scale;
    int pattern_shift;
    double initial_volume;
};

constexpr Net1Variant kNet1Variants[4] = {
    {7, 17, 0.012, 1.0, 0, 600.0},
    {5, 15, 0.010, 1.0, 5, 700.0},
    {9, 19, 0.014, 1.0, 10, 1400.0},
    {0, 10, 0.038, 0.6, 15, 600.0},
};

std::string net1_case_csv(int case_no) {
    const Net1Variant& v = kNet1Variants[case_no - 1];
    const char* junctions[9] = {"J1", "J2", "J3", "J4", "J5", "J6", "J7", "J8", "J9"};
    const char* pipes[12] = {"P1", "P2", "P3", "P4",  "P5",  "P6",
                             "P7", "P8", "P9", "P10", "P11", "P12"};
    std::string csv = kCsvHeader;
    double volume = v.initial_volume;
    for (int h = 0; h < 24; ++h) {
        double t = 3600.0 * h;
        double pat = kPattern[(h + v.pattern_shift) % 24];
        std::array<double, 9> d{};
        for (int j = 0; j < 9; ++j) d[j] = kNet1BaseDemand[j] * v.demand_scale * pat;
        bool fill = h >= v.fill_begin && h < v.fill_end;
        Net1Flows flows = net1_flows(case_no, fill, d, v.fill_rate);
        row(csv, t, "PU1", "flow", flows.pump);
        for (int p = 0; p < 12; ++p) row(csv, t, pipes[p], "flow", flows.pipe[p]);
        for (int j = 0; j < 9; ++j) row(csv, t, junctions[j], "demand", d[j]);
        row(csv, t, "TK1", "volume", volume);
        volume += flows.tank_net * 3600.0;
    }
    return csv;
}

// ---- scale -----------------------------------------------------------------

std::string scale_inp() {
    std::string inp = "[JUNCTIONS]\n";
    char buf[128];
    for (int j = 1; j <= 30; ++j) {
        std::snprintf(buf, sizeof buf, "J%02d    50\n", j);
        inp += buf;
    }
    inp += "\n[RESERVOIRS]\nR1    120\n\n[PIPES]\n";
    const double area = area_of_mm(200);
    for (int i = 1; i <= 29; ++i) {
        double q = (30 - i) * 0.002;  // everything drawn downstream of J_i
        double v = q / area;
        double length = 320.5 * v;  // 32 cells per pipe at dt = 10 s
        std::snprintf(buf, sizeof buf, "SP%02d   J%02d   J%02d   %s   200\n", i, i,
                      i + 1, g17(length).c_str());
        inp += buf;
    }
    inp += "\n[PUMPS]\nSPU1   R1   J01\n\n[OPTIONS]\nUNITS  LPS\n\n";
    inp += "[REACTIONS]\nGLOBAL BULK 0.1\n\n[END]\n";
    return inp;
}

std::string scale_csv() {
    std::string csv = kCsvHeader;
    char name[16];
    for (int h = 0; h < 24; ++h) {
        double t = 3600.0 * h;
        row(csv, t, "SPU1", "flow", 30 * 0.002);
        for (int i = 1; i <= 29; ++i) {
            std::snprintf(name, sizeof name, "SP%02d", i);
            row(csv, t, name, "flow", (30 - i) * 0.002);
        }
        for (int j = 1; j <= 30; ++j) {
            std::snprintf(name, sizeof name, "J%02d", j);
            row(csv, t, name, "demand", 0.002);
        }
    }
    return csv;
}

// ---- parse-level networks ----------------------------------------------------

std::string inp_header(const char* title) {
    return std::string("[TITLE]\n") + title + "\n\n";
}

}  // namespace

Fixture three_node_fixture() {
    Fixture f;
    f.name = "three_node";
    f.inp = kThreeNodeInp;
    f.scenarios.emplace_back("base", three_node_csv(-1, -1));
    return f;
}

std::string three_node_overshoot_csv() { return three_node_csv(3, -1); }
std::string three_node_unbalanced_csv() { return three_node_csv(-1, 5); }

Fixture ring_fixture() {
    Fixture f;
    f.name = "ring";
    f.inp = kRingInp;
    f.scenarios.emplace_back("steady", ring_csv());
    return f;
}

Fixture net1_like_fixture() {
    Fixture f;
    f.name = "net1";
    f.inp = kNet1Inp;
    for (int c = 1; c <= 4; ++c)
        f.scenarios.emplace_back("case" + std::to_string(c), net1_case_csv(c));
    return f;
}

Fixture scale_fixture() {
    Fixture f;
    f.name = "scale";
    f.inp = scale_inp();
    f.scenarios.emplace_back("steady", scale_csv());
    return f;
}

std::string fos_like_inp() {
    std::string inp = inp_header("Ring-and-chord gravity network");
    char buf[128];
    inp += "[JUNCTIONS]\n";
    for (int j = 1; j <= 36; ++j) {
        std::snprintf(buf, sizeof buf, "J%02d   30\n", j);
        inp += buf;
    }
    inp += "\n[RESERVOIRS]\nR1    80\n\n[PIPES]\n";
    int pipe = 0;
    auto add_pipe = [&](const std::string& a, const std::string& b) {
        std::snprintf(buf, sizeof buf, "FP%03d  %s  %s  100  200\n", ++pipe, a.c_str(),
                      b.c_str());
        inp += buf;
    };
    auto jname = [](int j) {
        char n[8];
        std::snprintf(n, sizeof n, "J%02d", j);
        return std::string(n);
    };
    add_pipe("R1", jname(1));
    for (int j = 1; j <= 36; ++j) add_pipe(jname(j), jname(j % 36 + 1));
    for (int j = 1; j <= 21; ++j) add_pipe(jname(j), jname(j + 12));
    inp += "\n[OPTIONS]\nUNITS  LPS\n\n[END]\n";
    return inp;
}

std::string net3_like_inp() {
    std::string inp = inp_header("Two-source network with three tanks");
    char buf[128];
    auto jname = [](int j) {
        char n[8];
        std::snprintf(n, sizeof n, "J%02d", j);
        return std::string(n);
    };
    inp += "[JUNCTIONS]\n";
    for (int j = 1; j <= 90; ++j) {
        std::snprintf(buf, sizeof buf, "%s   40\n", jname(j).c_str());
        inp += buf;
    }
    inp += "\n[RESERVOIRS]\nR1    90\nR2    85\n\n[TANKS]\n";
    inp += "TK1   55   5   1   14   12\nTK2   52   5   1   14   12\nTK3   58   5   1   14   12\n";
    inp += "\n[PIPES]\n";
    int pipe = 0;
    auto add_pipe = [&](const std::string& a, const std::string& b) {
        std::snprintf(buf, sizeof buf, "NP%03d  %s  %s  120  250\n", ++pipe, a.c_str(),
                      b.c_str());
        inp += buf;
    };
    for (int j = 1; j < 90; ++j) add_pipe(jname(j), jname(j + 1));
    for (int j = 1; j <= 22; ++j) add_pipe(jname(j), jname(j + 9));
    add_pipe("TK1", jname(10));
    add_pipe("TK2", jname(50));
    add_pipe("TK3", jname(80));
    inp += "\n[PUMPS]\nNPU1  R1  J01\nNPU2  R2  J45\n\n[OPTIONS]\nUNITS  LPS\n\n[END]\n";
    return inp;
}

std::string ctown_like_inp() {
    std::string inp = inp_header("Large zoned network");
    char buf[128];
    auto jname = [](int j) {
        char n[8];
        std::snprintf(n, sizeof n, "J%03d", j);
        return std::string(n);
    };
    inp += "[JUNCTIONS]\n";
    for (int j = 1; j <= 388; ++j) {
        std::snprintf(buf, sizeof buf, "%s   60\n", jname(j).c_str());
        inp += buf;
    }
    inp += "\n[RESERVOIRS]\nR1    130\n\n[TANKS]\n";
    for (int t = 1; t <= 7; ++t) {
        std::snprintf(buf, sizeof buf, "TK%d   70   5   1   14   12\n", t);
        inp += buf;
    }
    inp += "\n[PIPES]\n";
    int pipe = 0;
    auto add_pipe = [&](const std::string& a, const std::string& b) {
        std::snprintf(buf, sizeof buf, "CP%03d  %s  %s  150  250\n", ++pipe, a.c_str(),
                      b.c_str());
        inp += buf;
    };
    // Inline pumps and valves replace the chain pipe at these positions.
    auto is_pump_pos = [](int i) { return i % 35 == 0 && i <= 350; };
    auto is_valve_pos = [](int i) { return i % 60 == 0 && i <= 240; };
    for (int j = 1; j < 388; ++j)
        if (!is_pump_pos(j) && !is_valve_pos(j)) add_pipe(jname(j), jname(j + 1));
    for (int j = 1; j <= 49; ++j) add_pipe(jname(j), jname(j + 7));
    for (int t = 1; t <= 7; ++t) {
        std::snprintf(buf, sizeof buf, "CP%03d  TK%d  %s  150  250\n", ++pipe, t,
                      jname(50 * t).c_str());
        inp += buf;
    }
    inp += "\n[PUMPS]\nCPU00  R1  J001\n";
    int pump = 0;
    for (int j = 35; j <= 350; j += 35) {
        std::snprintf(buf, sizeof buf, "CPU%02d  %s  %s\n", ++pump, jname(j).c_str(),
                      jname(j + 1).c_str());
        inp += buf;
    }
    inp += "\n[VALVES]\n";
    int valve = 0;
    for (int j = 60; j <= 240; j += 60) {
        std::snprintf(buf, sizeof buf, "CV%d   %s  %s  250  PRV  40\n", ++valve,
                      jname(j).c_str(), jname(j + 1).c_str());
        inp += buf;
    }
    inp += "\n[OPTIONS]\nUNITS  LPS\n\n[END]\n";
    return inp;
}

}  // namespace cbsp
