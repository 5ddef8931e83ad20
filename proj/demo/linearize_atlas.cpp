// Linearizes a line-bundle atlas with nonlinear transitions and prints its
// first-order cocycle. Usage: demo_linearize_atlas [builtin-name | file.atlas]
#include <cstdio>
#include <filesystem>
#include <string>

#include "carroll/carroll.hpp"

int main(int argc, char** argv) {
    using namespace carroll;
    const std::string which = argc > 1 ? argv[1] : "circle3";
    try {
        const TransitionAtlas atlas =
            std::filesystem::exists(which) ? load_atlas_file(which) : builtin_atlas(which);
        const TransitionAtlas shifted = shift_transitions(atlas);
        const LinearizedCocycle lc = linearize(shifted);
        std::printf("atlas %s: %d charts, %zu transitions\n", atlas.name.c_str(), atlas.size(),
                    atlas.transitions.size());
        std::printf("section defect %.2e, origin defect %.2e\n", section_consistency(atlas).worst,
                    origin_defect(shifted));
        std::printf("cocycle residual %.2e, linearity defect of the original maps %.2e\n", lc.cocycle_residual,
                    lc.linearity_defect);
        std::printf("%6s %6s %10s %14s\n", "to", "from", "m", "c");
        for (std::size_t k = 0; k < lc.table.size(); k += 8) {
            const auto& r = lc.table[k];
            std::printf("%6s %6s %10.5f %14.10f\n", atlas.chart(r.i).name.c_str(), atlas.chart(r.j).name.c_str(),
                        r.m, r.c);
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
