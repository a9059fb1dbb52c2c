// Writes the synthetic two-source event list as CSV (ra,dec) to stdout.
//   make_two_sources SEED [PER_SOURCE] [BACKGROUND]

#include <cstdio>
#include <cstdlib>

#include "modescope/harness.hpp"

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s SEED [PER_SOURCE] [BACKGROUND]\n", argv[0]);
        return 1;
    }
    modescope::SourceField field = modescope::two_source_field();
    if (argc > 2) field.per_source = std::strtoull(argv[2], nullptr, 10);
    if (argc > 3) field.background_count = std::strtoull(argv[3], nullptr, 10);
    modescope::Rng rng(std::strtoull(argv[1], nullptr, 10));
    const auto s = modescope::draw_source_field(field, rng);
    std::printf("ra,dec\n");
    for (std::size_t i = 0; i < s.size(); ++i) std::printf("%.9f,%.9f\n", s[i][0], s[i][1]);
}
