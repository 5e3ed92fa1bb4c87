// Regenerates the checked-in fixture networks and hydraulic traces under a
// target directory (default: ./fixtures).  The files are deterministic, so a
// rerun after editing src/fixtures.cpp shows exactly what changed.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <vector>

#include "cbsp/fixtures.hpp"

namespace fs = std::filesystem;

namespace {

void put(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream f(path);
    if (!f) {
        std::cerr << "error: cannot write " << path << "\n";
        std::exit(2);
    }
    f << text;
    std::cout << "wrote " << path.string() << "\n";
}

void put_fixture(const fs::path& root, const cbsp::Fixture& fx) {
    put(root / fx.name / (fx.name + ".inp"), fx.inp);
    for (const auto& [id, csv] : fx.scenarios)
        put(root / fx.name / ("hydraulics_" + id + ".csv"), csv);
}

}  // namespace

int main(int argc, char** argv) {
    fs::path root = argc > 1 ? argv[1] : "fixtures";
    put_fixture(root, cbsp::three_node_fixture());
    put(root / "three_node" / "hydraulics_overshoot.csv", cbsp::three_node_overshoot_csv());
    put(root / "three_node" / "hydraulics_unbalanced.csv", cbsp::three_node_unbalanced_csv());
    put_fixture(root, cbsp::ring_fixture());
    put_fixture(root, cbsp::net1_like_fixture());
    put_fixture(root, cbsp::scale_fixture());
    put(root / "parse" / "fos_like.inp", cbsp::fos_like_inp());
    put(root / "parse" / "net3_like.inp", cbsp::net3_like_inp());
    put(root / "parse" / "ctown_like.inp", cbsp::ctown_like_inp());
    return 0;
}
