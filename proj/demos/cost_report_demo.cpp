// Prints the cost breakdown of the two built-in presets and a few space
// statistics. Doubles as an external-consumer smoke check: it must build with
// nothing but the public headers on the include path.

#include <cstdio>

#include "nasforge/arch_space.hpp"
#include "nasforge/cost_model.hpp"
#include "nasforge/fair_select.hpp"

int main() {
  using namespace nasforge;
  const SearchSpace s = paper_space();

  for (const char* name : {"x3d_s", "autox3d_s"}) {
    const ArchitectureSpec a =
        std::string(name) == "x3d_s" ? preset_x3d_s() : preset_autox3d_s();
    const CostReport r = cost_report(s, a);
    std::printf("%s flops=%lld params=%lld\n", name, static_cast<long long>(r.flops_total),
                static_cast<long long>(r.params_total));
    for (const CostLine& line : r.lines) {
      std::printf("  %-10s %12lld flops %9lld params  out %dx%dx%dx%d\n", line.name.c_str(),
                  static_cast<long long>(line.flops), static_cast<long long>(line.params),
                  line.out.c, line.out.t, line.out.h, line.out.w);
    }
  }

  const Cardinality card = cardinality(s);
  std::printf("log10(card)=%.2f\n", card.log10);

  const FairPattern p = fair_pattern(5);
  std::printf("fair_n5_part0=%d\n", static_cast<int>(part_counts(p)[0]));
  return 0;
}
