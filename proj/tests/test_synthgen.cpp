#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "popgen/featurize.hpp"
#include "popgen/genio.hpp"
#include "popgen/synthgen.hpp"

using namespace popgen;

TEST_CASE("cohort spec validation") {
  CohortSpec spec;
  CHECK_NOTHROW(spec.validate());
  spec.divergence = 0.0;
  CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("BadCohortSpec"),
                       Error);
  spec.divergence = 1.0;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = CohortSpec{};
  spec.n_variants = 0;
  CHECK_THROWS_AS(spec.validate(), Error);
}

TEST_CASE("sample ids are zero-padded and unique") {
  CHECK(synth_sample_id(0, 0) == "S0_00000");
  CHECK(synth_sample_id(2, 13) == "S2_00013");
  CHECK(synth_sample_id(1, 123456) == "S1_123456");
}

TEST_CASE("beta sampler matches requested moments") {
  Rng rng = make_rng(123);
  const double mean = 0.3, div = 0.1;
  const int n = 200000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = detail::population_frequency(rng, mean, div);
    REQUIRE(x >= 0.0);
    REQUIRE(x <= 1.0);
    sum += x;
    sum_sq += x * x;
  }
  const double m = sum / n;
  const double var = sum_sq / n - m * m;
  CHECK(m == doctest::Approx(mean).epsilon(0.01));
  CHECK(var == doctest::Approx(div * mean * (1 - mean)).epsilon(0.03));
}

TEST_CASE("generated cohort parses and is internally consistent") {
  CohortSpec spec;
  spec.n_populations = 3;
  spec.samples_per_population = 5;
  spec.n_variants = 40;
  spec.divergence = 0.2;
  spec.seed = 9;

  std::ostringstream vcf, panel;
  generate_cohort(spec, vcf, panel);

  StringLineSource panel_src(panel.str());
  const auto entries = parse_panel(panel_src);
  REQUIRE(entries.size() == 15);
  CHECK(entries[0].sample_id == "S0_00000");
  CHECK(entries[0].population == "P0");
  CHECK(entries[14].population == "P2");

  StringLineSource vcf_src(vcf.str());
  VcfParser parser(vcf_src);
  REQUIRE(parser.sample_names().size() == 15);
  CHECK(parser.sample_names()[0] == entries[0].sample_id);

  std::size_t n_records = 0;
  while (auto rec = parser.next()) {
    ++n_records;
    CHECK(rec->chrom == "1");
    CHECK(rec->pos == static_cast<std::int64_t>(n_records) * 100);
    REQUIRE(rec->calls.size() == 15);
    // INFO AC must equal the genotype sum; AN is fixed at 2N
    std::int64_t ac = 0;
    for (const auto& call : rec->calls) {
      CHECK(call.phased);
      ac += alt_allele_count(call);
    }
    CHECK(std::stoll(rec->info.at("AC")) == ac);
    CHECK(std::stoll(rec->info.at("AN")) == 30);
    const double af = std::stod(rec->info.at("AF"));
    CHECK(af == doctest::Approx(allele_frequency(ac, 30)).epsilon(1e-4));
  }
  CHECK(n_records == 40);
}

TEST_CASE("generation is deterministic in the seed") {
  CohortSpec spec;
  spec.samples_per_population = 4;
  spec.n_variants = 20;
  std::ostringstream v1, p1, v2, p2, v3, p3;
  generate_cohort(spec, v1, p1);
  generate_cohort(spec, v2, p2);
  CHECK(v1.str() == v2.str());
  CHECK(p1.str() == p2.str());
  spec.seed = spec.seed + 1;
  generate_cohort(spec, v3, p3);
  CHECK(v1.str() != v3.str());
  CHECK(p1.str() == p3.str());  // panel layout does not depend on the seed
}

TEST_CASE("divergence controls population separability") {
  // With high divergence the between-population frequency spread dominates;
  // mean within-population genotype correlation across variants should rise.
  auto mean_between_pop_gap = [](double divergence) {
    CohortSpec spec;
    spec.n_populations = 2;
    spec.samples_per_population = 30;
    spec.n_variants = 150;
    spec.divergence = divergence;
    spec.seed = 77;
    std::ostringstream vcf, panel;
    generate_cohort(spec, vcf, panel);
    StringLineSource src(vcf.str());
    VcfParser parser(src);
    double gap = 0.0;
    std::size_t n = 0;
    while (auto rec = parser.next()) {
      double mean0 = 0.0, mean1 = 0.0;
      for (std::size_t s = 0; s < 30; ++s)
        mean0 += alt_allele_count(rec->calls[s]);
      for (std::size_t s = 30; s < 60; ++s)
        mean1 += alt_allele_count(rec->calls[s]);
      gap += std::abs(mean0 - mean1) / 30.0;
      ++n;
    }
    return gap / static_cast<double>(n);
  };
  CHECK(mean_between_pop_gap(0.4) > 2.0 * mean_between_pop_gap(0.01));
}
