#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "popgen/featurize.hpp"

using namespace popgen;

namespace {

VariantRecord make_record(std::string chrom, std::int64_t pos, std::string id,
                          const std::vector<std::vector<int>>& calls) {
  VariantRecord rec;
  rec.chrom = std::move(chrom);
  rec.pos = pos;
  rec.id = std::move(id);
  rec.ref_allele = "A";
  rec.alt_alleles = {"G"};
  for (const auto& alleles : calls)
    rec.calls.push_back(GenotypeCall{alleles, true});
  return rec;
}

const std::vector<std::string> kSamples = {"s3", "s1", "s2"};

// Hand-built cohort: three samples, four variants.
//   v1: counts (s3,s1,s2) = (0,1,2)  -> total 3
//   v2: all zero                      -> no support
//   v3: counts (2,2,2)                -> total 6
//   v4: s2 missing; impute-zero gives (1,0,0), drop-variant removes it
std::vector<VariantRecord> make_cohort() {
  std::vector<VariantRecord> recs;
  recs.push_back(make_record("1", 100, "v1", {{0, 1}, {0, 0}, {1, 1}}));
  recs.push_back(make_record("1", 200, "v2", {{0, 0}, {0, 0}, {0, 0}}));
  recs.push_back(make_record("2", 50, "v3", {{1, 1}, {1, 1}, {1, 1}}));
  recs.push_back(make_record("1", 150, "v4", {{1, 0}, {0, 0}, {-1, 0}}));
  return recs;
}

}  // namespace

TEST_CASE("extract_sample_variants with impute-zero") {
  const auto svs = extract_sample_variants(make_cohort(), kSamples,
                                           MissingPolicy::ImputeZero);
  REQUIRE(svs.size() == 12);  // 4 variants x 3 samples
  // first record, third sample (s2): 1|1 -> 2
  CHECK(svs[2].sample_id == "s2");
  CHECK(svs[2].alt_count == 2);
  // missing call imputes to zero
  const auto& missing_sv = svs[11];
  CHECK(missing_sv.sample_id == "s2");
  CHECK(missing_sv.variant_key.id == "v4");
  CHECK(missing_sv.alt_count == 0);
}

TEST_CASE("extract_sample_variants with drop-variant") {
  const auto svs = extract_sample_variants(make_cohort(), kSamples,
                                           MissingPolicy::DropVariant);
  REQUIRE(svs.size() == 9);  // v4 dropped entirely
  for (const auto& sv : svs) CHECK(sv.variant_key.id != "v4");
}

TEST_CASE("support and frequency filters") {
  const auto svs = extract_sample_variants(make_cohort(), kSamples,
                                           MissingPolicy::ImputeZero);
  const auto grouped = group_by_variant(svs, kSamples);
  REQUIRE(grouped.size() == 4);

  const auto supported = support_filter(grouped);
  REQUIRE(supported.size() == 3);  // v2 has no carrier
  for (const auto& key : supported) CHECK(key.id != "v2");

  SUBCASE("threshold boundary is inclusive") {
    CHECK(frequency_filter(grouped, 3).size() == 2);   // v1 (=3) and v3
    CHECK(frequency_filter(grouped, 4).size() == 1);   // v3 only
    CHECK(frequency_filter(grouped, 6).size() == 1);   // v3 total exactly 6
    CHECK(frequency_filter(grouped, 7).empty());
    CHECK(frequency_filter(grouped, 0).size() == 4);
  }
}

TEST_CASE("assemble_matrix sorts rows and columns deterministically") {
  const auto svs = extract_sample_variants(make_cohort(), kSamples,
                                           MissingPolicy::ImputeZero);
  const auto grouped = group_by_variant(svs, kSamples);
  const auto fm = assemble_matrix(svs, support_filter(grouped));

  CHECK(fm.sample_ids == std::vector<std::string>{"s1", "s2", "s3"});
  REQUIRE(fm.cols() == 3);
  // (chrom, pos, id) order: 1:100:v1, 1:150:v4, 2:50:v3
  CHECK(fm.variant_keys[0] == VariantKey{"1", 100, "v1"});
  CHECK(fm.variant_keys[1] == VariantKey{"1", 150, "v4"});
  CHECK(fm.variant_keys[2] == VariantKey{"2", 50, "v3"});
  // s1 row: v1=0, v4=0, v3=2
  CHECK(fm.at(0, 0) == 0);
  CHECK(fm.at(0, 2) == 2);
  // s3 row: v1=0? no: s3 call for v1 is 0|1 -> 1
  CHECK(fm.at(2, 0) == 1);
  CHECK(fm.at(2, 1) == 1);
  CHECK(fm.at(1, 0) == 2);  // s2, v1
}

TEST_CASE("assemble_matrix rejects inconsistent sample sets") {
  std::vector<SampleVariant> svs = {
      {"s1", {"1", 100, "v1"}, 1},
      {"s2", {"1", 100, "v1"}, 0},
      {"s1", {"1", 200, "v2"}, 2},  // s2 never saw v2
  };
  CHECK_THROWS_WITH_AS(
      assemble_matrix(svs, {{"1", 100, "v1"}, {"1", 200, "v2"}}),
      doctest::Contains("InconsistentSampleSet"), Error);
}

TEST_CASE("streaming builder matches the compose-by-hand pipeline") {
  std::string vcf = "#CHROM\tPOS\tID\tREF\tALT\tQUAL\tFILTER\tINFO\tFORMAT";
  for (const auto& s : kSamples) vcf += "\t" + s;
  vcf += "\n";
  for (const auto& rec : make_cohort()) vcf += format_vcf_line(rec) + "\n";

  StringLineSource src(vcf);
  VcfParser parser(src);
  FeaturizeOptions opts;
  opts.min_alt = 3;
  const auto streamed = build_feature_matrix(parser, opts);

  const auto svs = extract_sample_variants(make_cohort(), kSamples,
                                           MissingPolicy::ImputeZero);
  const auto grouped = group_by_variant(svs, kSamples);
  auto keys = frequency_filter(grouped, 3);
  // intersect with support filter (frequency >= 3 implies support here)
  const auto expected = assemble_matrix(svs, keys);
  CHECK(streamed == expected);
}

TEST_CASE("scaling to model matrices") {
  FeatureMatrix fm;
  fm.sample_ids = {"a", "b"};
  fm.variant_keys = {{"1", 1, "x"}, {"1", 2, "y"}};
  fm.values = {2, 1, 0, 2};

  const auto raw = to_model_matrix(fm, ScalingKind::None);
  CHECK(raw(0, 0) == 2.0);
  CHECK(raw(1, 1) == 2.0);

  const auto half = to_model_matrix(fm, ScalingKind::HalfCount);
  CHECK(half(0, 0) == 1.0);
  CHECK(half(0, 1) == 0.5);
  CHECK(half(1, 0) == 0.0);

  const auto unit = to_model_matrix(fm, ScalingKind::UnitNorm);
  for (std::size_t r = 0; r < unit.rows(); ++r) {
    double ss = 0.0;
    for (std::size_t c = 0; c < unit.cols(); ++c) ss += unit(r, c) * unit(r, c);
    CHECK(ss / static_cast<double>(unit.cols()) == doctest::Approx(1.0));
  }
}

TEST_CASE("attach_labels builds a sorted vocabulary") {
  FeatureMatrix fm;
  fm.sample_ids = {"s1", "s2", "s3"};
  fm.variant_keys = {{"1", 1, "x"}};
  fm.values = {0, 1, 2};
  std::vector<PanelEntry> panel = {
      {"s2", "YRI", "AFR", "male"},
      {"s1", "GBR", "EUR", "female"},
      {"s3", "GBR", "EUR", "male"},
  };
  const auto ds = attach_labels(fm, panel, LabelLevel::Population);
  CHECK(ds.label_vocabulary == std::vector<std::string>{"GBR", "YRI"});
  CHECK(ds.labels == std::vector<std::size_t>{0, 1, 0});

  const auto super = attach_labels(fm, panel, LabelLevel::SuperPopulation);
  CHECK(super.label_vocabulary == std::vector<std::string>{"AFR", "EUR"});
  CHECK(super.labels == std::vector<std::size_t>{1, 0, 1});

  panel.pop_back();
  CHECK_THROWS_WITH_AS(attach_labels(fm, panel, LabelLevel::Population),
                       doctest::Contains("UnknownSample"), Error);
}

namespace {

LabeledDataset make_labeled(std::size_t per_class, std::size_t n_classes) {
  LabeledDataset ds;
  ds.matrix.variant_keys = {{"1", 1, "x"}};
  for (std::size_t c = 0; c < n_classes; ++c) {
    ds.label_vocabulary.push_back("C" + std::to_string(c));
    for (std::size_t i = 0; i < per_class; ++i) {
      ds.matrix.sample_ids.push_back("s" + std::to_string(c) + "_" +
                                     std::to_string(i));
      ds.matrix.values.push_back(static_cast<std::uint8_t>(c % 3));
      ds.labels.push_back(c);
    }
  }
  return ds;
}

}  // namespace

TEST_CASE("stratified split respects fractions per class") {
  const auto ds = make_labeled(10, 3);
  SplitSpec spec{0.6, 0.2, 0.2, 7};
  const auto parts = split(ds, spec);
  CHECK(parts.train.labels.size() == 18);
  CHECK(parts.test.labels.size() == 6);
  CHECK(parts.validation.labels.size() == 6);
  // exactly stratified: 6/2/2 per class
  for (std::size_t c = 0; c < 3; ++c) {
    auto count = [&](const LabeledDataset& d) {
      return std::count(d.labels.begin(), d.labels.end(), c);
    };
    CHECK(count(parts.train) == 6);
    CHECK(count(parts.test) == 2);
    CHECK(count(parts.validation) == 2);
  }
  // disjoint and exhaustive
  std::vector<std::string> all = parts.train.matrix.sample_ids;
  all.insert(all.end(), parts.test.matrix.sample_ids.begin(),
             parts.test.matrix.sample_ids.end());
  all.insert(all.end(), parts.validation.matrix.sample_ids.begin(),
             parts.validation.matrix.sample_ids.end());
  std::sort(all.begin(), all.end());
  auto expected = ds.matrix.sample_ids;
  std::sort(expected.begin(), expected.end());
  CHECK(all == expected);
}

TEST_CASE("split is deterministic in the seed and sensitive to it") {
  const auto ds = make_labeled(20, 2);
  SplitSpec spec{0.5, 0.25, 0.25, 11};
  const auto a = split(ds, spec);
  const auto b = split(ds, spec);
  CHECK(a.train.matrix.sample_ids == b.train.matrix.sample_ids);
  CHECK(a.test.matrix.sample_ids == b.test.matrix.sample_ids);
  spec.seed = 12;
  const auto c = split(ds, spec);
  CHECK(a.train.matrix.sample_ids != c.train.matrix.sample_ids);
}

TEST_CASE("split validation errors") {
  const auto ds = make_labeled(4, 2);
  CHECK_THROWS_WITH_AS(split(ds, SplitSpec{0.5, 0.5, 0.5, 0}),
                       doctest::Contains("BadSplitSpec"), Error);
  CHECK_THROWS_WITH_AS(split(ds, SplitSpec{-0.2, 0.6, 0.6, 0}),
                       doctest::Contains("BadSplitSpec"), Error);
  const auto tiny = make_labeled(2, 2);
  CHECK_THROWS_WITH_AS(split(tiny, SplitSpec{0.4, 0.3, 0.3, 0}),
                       doctest::Contains("ClassTooSmall"), Error);
}

TEST_CASE("merge_feature_matrices unions columns") {
  FeatureMatrix a;
  a.sample_ids = {"s1", "s2"};
  a.variant_keys = {{"2", 10, "b"}};
  a.values = {1, 2};
  FeatureMatrix b;
  b.sample_ids = {"s1", "s2"};
  b.variant_keys = {{"1", 5, "a"}};
  b.values = {2, 0};

  const auto merged = merge_feature_matrices({a, b});
  REQUIRE(merged.cols() == 2);
  CHECK(merged.variant_keys[0] == VariantKey{"1", 5, "a"});
  CHECK(merged.at(0, 0) == 2);
  CHECK(merged.at(0, 1) == 1);
  CHECK(merged.at(1, 1) == 2);

  FeatureMatrix dup = a;
  CHECK_THROWS_AS(merge_feature_matrices({a, dup}), Error);
  FeatureMatrix other = b;
  other.sample_ids = {"s1", "sX"};
  CHECK_THROWS_AS(merge_feature_matrices({a, other}), Error);
}

TEST_CASE("labeled CSV export") {
  const auto ds = make_labeled(1, 2);
  std::ostringstream out;
  export_labeled_csv(ds, out);
  CHECK(out.str() ==
        "sample_id,1:1:x,label\n"
        "s0_0,0,C0\n"
        "s1_0,1,C1\n");
}

TEST_CASE("matrix cache round-trips exactly") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "popgen_featurize_test";
  fs::create_directories(dir);
  const auto svs = extract_sample_variants(make_cohort(), kSamples,
                                           MissingPolicy::ImputeZero);
  const auto fm =
      assemble_matrix(svs, support_filter(group_by_variant(svs, kSamples)));

  const auto manifest = (dir / "m.manifest").string();
  const auto array = (dir / "m.bin").string();
  save_matrix_cache(fm, manifest, array);
  CHECK(load_matrix_cache(manifest, array) == fm);

  SUBCASE("truncated array detected") {
    fs::resize_file(array, fs::file_size(array) - 1);
    CHECK_THROWS_WITH_AS(load_matrix_cache(manifest, array),
                         doctest::Contains("CorruptArtifact"), Error);
  }
  SUBCASE("future version rejected") {
    std::ofstream(manifest) << "popgen-matrix-cache v999\nrows 0\ncols 0\n";
    CHECK_THROWS_WITH_AS(load_matrix_cache(manifest, array),
                         doctest::Contains("VersionMismatch"), Error);
  }
  fs::remove_all(dir);
}
