#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "popgen/common.hpp"

namespace popgen {

// Seeded synthetic cohort: per-variant base allele frequency, per-population
// Beta-distributed frequencies around it, diploid genotypes drawn i.i.d.
struct CohortSpec {
  std::size_t n_populations = 3;
  std::size_t samples_per_population = 100;
  std::size_t n_variants = 3000;
  double divergence = 0.1;
  std::uint64_t seed = 42;

  void validate() const {
    if (n_populations < 1 || samples_per_population < 1 || n_variants < 1)
      throw config_error("BadCohortSpec", "all counts must be >= 1");
    if (!(divergence > 0.0 && divergence < 1.0))
      throw config_error("BadCohortSpec", "divergence must be in (0,1)");
  }
};

namespace detail {

// Beta(a, b) via two gamma draws.
inline double sample_beta(Rng& rng, double a, double b) {
  std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  const double s = x + y;
  return s > 0 ? x / s : 0.5;
}

// Beta with given mean m and variance divergence*m*(1-m).
inline double population_frequency(Rng& rng, double base, double divergence) {
  const double s = 1.0 / divergence - 1.0;
  return sample_beta(rng, base * s, (1.0 - base) * s);
}

}  // namespace detail

inline std::string synth_sample_id(std::size_t pop, std::size_t member) {
  std::ostringstream os;
  os << "S" << pop << "_";
  std::string m = std::to_string(member);
  os << std::string(5 - std::min<std::size_t>(5, m.size()), '0') << m;
  return os.str();
}

inline void generate_cohort(const CohortSpec& spec, std::ostream& vcf,
                            std::ostream& panel) {
  spec.validate();
  Rng rng = make_rng(spec.seed);
  std::uniform_real_distribution<double> base_dist(0.05, 0.95);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  static const std::array<const char*, 5> kSupers = {"EAS", "EUR", "AFR",
                                                     "AMR", "SAS"};
  const std::size_t n_samples =
      spec.n_populations * spec.samples_per_population;

  std::vector<std::string> sample_ids;
  sample_ids.reserve(n_samples);
  panel << "sample\tpop\tsuper_pop\tgender\n";
  for (std::size_t p = 0; p < spec.n_populations; ++p) {
    for (std::size_t m = 0; m < spec.samples_per_population; ++m) {
      const std::string sid = synth_sample_id(p, m);
      sample_ids.push_back(sid);
      panel << sid << "\tP" << p << "\t" << kSupers[p % kSupers.size()]
            << "\t" << (m % 2 == 0 ? "male" : "female") << "\n";
    }
  }

  vcf << "##fileformat=VCFv4.1\n";
  vcf << "##source=popgen-synthgen\n";
  vcf << "##FORMAT=<ID=GT,Number=1,Type=String,Description=\"Genotype\">\n";
  vcf << "#CHROM\tPOS\tID\tREF\tALT\tQUAL\tFILTER\tINFO\tFORMAT";
  for (const auto& sid : sample_ids) vcf << '\t' << sid;
  vcf << '\n';

  std::vector<int> genotypes(n_samples * 2);
  for (std::size_t v = 0; v < spec.n_variants; ++v) {
    const double base = base_dist(rng);
    std::vector<double> pop_freq(spec.n_populations);
    for (std::size_t p = 0; p < spec.n_populations; ++p)
      pop_freq[p] = detail::population_frequency(rng, base, spec.divergence);

    std::int64_t ac = 0;
    for (std::size_t s = 0; s < n_samples; ++s) {
      const double f = pop_freq[s / spec.samples_per_population];
      const int a0 = unit(rng) < f ? 1 : 0;
      const int a1 = unit(rng) < f ? 1 : 0;
      genotypes[2 * s] = a0;
      genotypes[2 * s + 1] = a1;
      ac += a0 + a1;
    }
    const std::int64_t an = static_cast<std::int64_t>(n_samples) * 2;

    vcf << "1\t" << (v + 1) * 100 << "\tv" << v << "\tA\tG\t100\tPASS\t"
        << "AC=" << ac << ";AF="
        << static_cast<double>(ac) / static_cast<double>(an) << ";AN=" << an
        << "\tGT";
    for (std::size_t s = 0; s < n_samples; ++s)
      vcf << '\t' << genotypes[2 * s] << '|' << genotypes[2 * s + 1];
    vcf << '\n';
  }
}

}  // namespace popgen
