#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "popgen/common.hpp"
#include "popgen/genio.hpp"
#include "popgen/matrix.hpp"

namespace popgen {

struct VariantKey {
  std::string chrom;
  std::int64_t pos = 0;
  std::string id;

  auto operator<=>(const VariantKey&) const = default;
};

struct SampleVariant {
  std::string sample_id;
  VariantKey variant_key;
  std::uint8_t alt_count = 0;
};

enum class MissingPolicy { ImputeZero, DropVariant };

// rows = samples (sorted lexicographically), columns = variants (sorted by
// (chrom, pos, id)). Counts stored as uint8, widened to double at model
// boundaries.
struct FeatureMatrix {
  std::vector<std::string> sample_ids;
  std::vector<VariantKey> variant_keys;
  std::vector<std::uint8_t> values;  // row-major

  std::size_t rows() const { return sample_ids.size(); }
  std::size_t cols() const { return variant_keys.size(); }
  std::uint8_t at(std::size_t r, std::size_t c) const {
    return values[r * cols() + c];
  }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;
};

enum class ScalingKind {
  None,
  HalfCount,   // divide counts by 2, landing in [0,1]
  UnitNorm     // scale each row so (1/d)*||x||^2 = 1
};

inline Matrix2D to_model_matrix(const FeatureMatrix& fm,
                                ScalingKind scaling = ScalingKind::HalfCount) {
  Matrix2D out(fm.rows(), fm.cols());
  for (std::size_t r = 0; r < fm.rows(); ++r)
    for (std::size_t c = 0; c < fm.cols(); ++c)
      out(r, c) = static_cast<double>(fm.at(r, c));
  switch (scaling) {
    case ScalingKind::None:
      break;
    case ScalingKind::HalfCount:
      for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= 0.5;
      break;
    case ScalingKind::UnitNorm:
      for (std::size_t r = 0; r < out.rows(); ++r) {
        double ss = 0.0;
        for (std::size_t c = 0; c < out.cols(); ++c)
          ss += out(r, c) * out(r, c);
        const double norm =
            std::sqrt(ss / static_cast<double>(std::max<std::size_t>(
                               1, out.cols())));
        if (norm > 0)
          for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) /= norm;
      }
      break;
  }
  return out;
}

struct LabeledDataset {
  FeatureMatrix matrix;
  std::vector<std::size_t> labels;  // one class index per row
  std::vector<std::string> label_vocabulary;
};

struct SplitSpec {
  double train_fraction = 0.6;
  double test_fraction = 0.2;
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;

  void validate() const {
    if (train_fraction < 0 || test_fraction < 0 || validation_fraction < 0)
      throw config_error("BadSplitSpec", "negative fraction");
    const double sum = train_fraction + test_fraction + validation_fraction;
    if (std::abs(sum - 1.0) > 1e-9)
      throw config_error("BadSplitSpec", "fractions must sum to 1");
  }
};

// ---------------------------------------------------------------------------
// Extraction and filtering
// ---------------------------------------------------------------------------

inline VariantKey key_of(const VariantRecord& rec) {
  return VariantKey{rec.chrom, rec.pos, rec.id};
}

// One SampleVariant per (record, sample). Missing calls follow `policy`:
// impute-zero emits alt_count 0; drop-variant skips the whole record when any
// call is missing.
inline std::vector<SampleVariant> extract_sample_variants(
    const std::vector<VariantRecord>& records,
    const std::vector<std::string>& samples,
    MissingPolicy policy = MissingPolicy::ImputeZero) {
  std::vector<SampleVariant> out;
  for (const auto& rec : records) {
    if (rec.calls.size() != samples.size())
      throw data_error("ColumnCountMismatch",
                       "record call count does not match sample list");
    if (policy == MissingPolicy::DropVariant) {
      bool any_missing = false;
      for (const auto& call : rec.calls)
        if (call.has_missing()) {
          any_missing = true;
          break;
        }
      if (any_missing) continue;
    }
    const VariantKey key = key_of(rec);
    for (std::size_t s = 0; s < samples.size(); ++s) {
      const auto& call = rec.calls[s];
      int count = 0;
      if (call.has_missing()) {
        count = 0;  // impute-zero
      } else {
        count = alt_allele_count(call);
      }
      out.push_back(SampleVariant{samples[s], key,
                                  static_cast<std::uint8_t>(count)});
    }
  }
  return out;
}

// Per-variant count columns, used by the filters.
using GroupedCounts = std::map<VariantKey, std::vector<std::uint8_t>>;

inline GroupedCounts group_by_variant(
    const std::vector<SampleVariant>& sample_variants,
    const std::vector<std::string>& samples) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < samples.size(); ++i) index[samples[i]] = i;
  GroupedCounts grouped;
  for (const auto& sv : sample_variants) {
    auto it = index.find(sv.sample_id);
    if (it == index.end())
      throw data_error("UnknownSample", sv.sample_id);
    auto& column = grouped[sv.variant_key];
    if (column.empty()) column.resize(samples.size(), 0);
    column[it->second] = sv.alt_count;
  }
  return grouped;
}

// Keeps variants carried by at least one sample.
inline std::vector<VariantKey> support_filter(const GroupedCounts& grouped) {
  std::vector<VariantKey> retained;
  for (const auto& [key, column] : grouped) {
    for (std::uint8_t c : column)
      if (c > 0) {
        retained.push_back(key);
        break;
      }
  }
  return retained;
}

// Keeps variants whose total alternate-allele count is >= min_alt.
inline std::vector<VariantKey> frequency_filter(const GroupedCounts& grouped,
                                                std::int64_t min_alt = 12) {
  std::vector<VariantKey> retained;
  for (const auto& [key, column] : grouped) {
    std::int64_t total = 0;
    for (std::uint8_t c : column) total += c;
    if (total >= min_alt) retained.push_back(key);
  }
  return retained;
}

// ---------------------------------------------------------------------------
// Matrix assembly
// ---------------------------------------------------------------------------

inline FeatureMatrix assemble_matrix(
    const std::vector<SampleVariant>& sample_variants,
    const std::vector<VariantKey>& retained_keys) {
  FeatureMatrix fm;
  fm.variant_keys = retained_keys;
  std::sort(fm.variant_keys.begin(), fm.variant_keys.end());
  fm.variant_keys.erase(
      std::unique(fm.variant_keys.begin(), fm.variant_keys.end()),
      fm.variant_keys.end());

  std::map<VariantKey, std::size_t> col_index;
  for (std::size_t c = 0; c < fm.variant_keys.size(); ++c)
    col_index[fm.variant_keys[c]] = c;

  std::map<std::string, std::size_t> row_index;  // sorted sample order
  for (const auto& sv : sample_variants) row_index.emplace(sv.sample_id, 0);
  fm.sample_ids.reserve(row_index.size());
  for (auto& [sid, idx] : row_index) {
    idx = fm.sample_ids.size();
    fm.sample_ids.push_back(sid);
  }

  const std::size_t n_cols = fm.variant_keys.size();
  fm.values.assign(fm.sample_ids.size() * n_cols, 0);
  std::vector<bool> filled(fm.values.size(), false);
  for (const auto& sv : sample_variants) {
    auto cit = col_index.find(sv.variant_key);
    if (cit == col_index.end()) continue;  // filtered out
    const std::size_t pos = row_index[sv.sample_id] * n_cols + cit->second;
    fm.values[pos] = sv.alt_count;
    filled[pos] = true;
  }
  for (std::size_t i = 0; i < filled.size(); ++i)
    if (!filled[i])
      throw data_error("InconsistentSampleSet",
                       "sample " + fm.sample_ids[i / n_cols] +
                           " missing a retained variant");
  return fm;
}

enum class LabelLevel { Population, SuperPopulation };

inline LabeledDataset attach_labels(FeatureMatrix matrix,
                                    const std::vector<PanelEntry>& panel,
                                    LabelLevel level) {
  std::unordered_map<std::string, const PanelEntry*> by_id;
  for (const auto& e : panel) by_id[e.sample_id] = &e;

  std::vector<std::string> raw_labels;
  raw_labels.reserve(matrix.rows());
  for (const auto& sid : matrix.sample_ids) {
    auto it = by_id.find(sid);
    if (it == by_id.end()) throw data_error("UnknownSample", sid);
    raw_labels.push_back(level == LabelLevel::Population
                             ? it->second->population
                             : it->second->super_population);
  }

  LabeledDataset ds;
  ds.label_vocabulary = raw_labels;
  std::sort(ds.label_vocabulary.begin(), ds.label_vocabulary.end());
  ds.label_vocabulary.erase(
      std::unique(ds.label_vocabulary.begin(), ds.label_vocabulary.end()),
      ds.label_vocabulary.end());
  for (const auto& label : raw_labels) {
    auto it = std::lower_bound(ds.label_vocabulary.begin(),
                               ds.label_vocabulary.end(), label);
    ds.labels.push_back(
        static_cast<std::size_t>(it - ds.label_vocabulary.begin()));
  }
  ds.matrix = std::move(matrix);
  return ds;
}

// ---------------------------------------------------------------------------
// Stratified split
// ---------------------------------------------------------------------------

namespace detail {

inline LabeledDataset take_rows(const LabeledDataset& ds,
                                const std::vector<std::size_t>& rows) {
  LabeledDataset out;
  out.label_vocabulary = ds.label_vocabulary;
  out.matrix.variant_keys = ds.matrix.variant_keys;
  const std::size_t n_cols = ds.matrix.cols();
  for (std::size_t r : rows) {
    out.matrix.sample_ids.push_back(ds.matrix.sample_ids[r]);
    out.labels.push_back(ds.labels[r]);
    const auto* begin = ds.matrix.values.data() + r * n_cols;
    out.matrix.values.insert(out.matrix.values.end(), begin, begin + n_cols);
  }
  return out;
}

// Largest-remainder allocation of n items to the given fractions.
inline std::vector<std::size_t> allocate(std::size_t n,
                                         const std::vector<double>& fractions) {
  std::vector<std::size_t> counts(fractions.size(), 0);
  std::vector<double> remainders(fractions.size(), 0.0);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    const double exact = fractions[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    remainders[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  while (assigned < n) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < fractions.size(); ++i)
      if (remainders[i] > remainders[best]) best = i;
    ++counts[best];
    remainders[best] = -1.0;
    ++assigned;
  }
  return counts;
}

}  // namespace detail

struct SplitResult {
  LabeledDataset train, test, validation;
};

// Stratified three-way split, deterministic given spec.seed.
inline SplitResult split(const LabeledDataset& ds, const SplitSpec& spec) {
  spec.validate();
  const std::vector<double> fractions{spec.train_fraction, spec.test_fraction,
                                      spec.validation_fraction};
  std::size_t positive_parts = 0;
  for (double f : fractions)
    if (f > 0) ++positive_parts;

  std::vector<std::vector<std::size_t>> by_class(ds.label_vocabulary.size());
  for (std::size_t r = 0; r < ds.labels.size(); ++r)
    by_class[ds.labels[r]].push_back(r);

  Rng rng = make_rng(spec.seed);
  std::vector<std::size_t> part_rows[3];
  for (auto& members : by_class) {
    if (members.empty()) continue;
    if (members.size() < positive_parts)
      throw config_error("ClassTooSmall",
                         "class has fewer rows than split partitions");
    std::shuffle(members.begin(), members.end(), rng);
    const auto counts = detail::allocate(members.size(), fractions);
    std::size_t offset = 0;
    for (int p = 0; p < 3; ++p) {
      for (std::size_t i = 0; i < counts[p]; ++i)
        part_rows[p].push_back(members[offset + i]);
      offset += counts[p];
    }
  }
  for (auto& rows : part_rows) std::sort(rows.begin(), rows.end());
  return SplitResult{detail::take_rows(ds, part_rows[0]),
                     detail::take_rows(ds, part_rows[1]),
                     detail::take_rows(ds, part_rows[2])};
}

// ---------------------------------------------------------------------------
// Convenience pipeline and on-disk formats
// ---------------------------------------------------------------------------

struct FeaturizeOptions {
  std::int64_t min_alt = 12;
  MissingPolicy missing = MissingPolicy::ImputeZero;
};

// Streaming single pass over a VCF: per-column filters are applied as each
// record arrives, so memory holds only the retained columns.
inline FeatureMatrix build_feature_matrix(VcfParser& parser,
                                          const FeaturizeOptions& opts = {}) {
  const auto& samples = parser.sample_names();
  GroupedCounts retained;
  while (auto rec = parser.next()) {
    if (opts.missing == MissingPolicy::DropVariant) {
      bool any_missing = false;
      for (const auto& call : rec->calls)
        if (call.has_missing()) {
          any_missing = true;
          break;
        }
      if (any_missing) continue;
    }
    std::vector<std::uint8_t> column(samples.size(), 0);
    std::int64_t total = 0;
    bool any_support = false;
    for (std::size_t s = 0; s < samples.size(); ++s) {
      const auto& call = rec->calls[s];
      const int count = call.has_missing() ? 0 : alt_allele_count(call);
      column[s] = static_cast<std::uint8_t>(count);
      total += count;
      if (count > 0) any_support = true;
    }
    if (!any_support || total < opts.min_alt) continue;
    retained.emplace(key_of(*rec), std::move(column));
  }

  // Reorder rows to sorted sample order.
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return samples[a] < samples[b];
  });

  FeatureMatrix fm;
  for (std::size_t i : order) fm.sample_ids.push_back(samples[i]);
  fm.variant_keys.reserve(retained.size());
  for (const auto& [key, column] : retained) fm.variant_keys.push_back(key);
  fm.values.assign(fm.rows() * fm.cols(), 0);
  std::size_t c = 0;
  for (const auto& [key, column] : retained) {
    for (std::size_t r = 0; r < fm.rows(); ++r)
      fm.values[r * fm.cols() + c] = column[order[r]];
    ++c;
  }
  return fm;
}

// Column-wise union of per-file matrices over the same sample set (e.g.
// per-chromosome VCFs). Duplicate variant keys are an error.
inline FeatureMatrix merge_feature_matrices(
    const std::vector<FeatureMatrix>& parts) {
  if (parts.empty()) return {};
  FeatureMatrix out;
  out.sample_ids = parts[0].sample_ids;
  std::map<VariantKey, std::pair<std::size_t, std::size_t>> columns;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    if (parts[p].sample_ids != out.sample_ids)
      throw data_error("InconsistentSampleSet",
                       "input files carry different sample sets");
    for (std::size_t c = 0; c < parts[p].cols(); ++c)
      if (!columns.emplace(parts[p].variant_keys[c], std::make_pair(p, c))
               .second)
        throw data_error("InconsistentSampleSet",
                         "duplicate variant across input files");
  }
  out.variant_keys.reserve(columns.size());
  for (const auto& [key, loc] : columns) out.variant_keys.push_back(key);
  out.values.assign(out.rows() * out.cols(), 0);
  std::size_t c = 0;
  for (const auto& [key, loc] : columns) {
    const auto& part = parts[loc.first];
    for (std::size_t r = 0; r < out.rows(); ++r)
      out.values[r * out.cols() + c] = part.at(r, loc.second);
    ++c;
  }
  return out;
}

inline void export_labeled_csv(const LabeledDataset& ds, std::ostream& out) {
  out << "sample_id";
  for (const auto& key : ds.matrix.variant_keys)
    out << ',' << key.chrom << ':' << key.pos << ':' << key.id;
  out << ",label\n";
  for (std::size_t r = 0; r < ds.matrix.rows(); ++r) {
    out << ds.matrix.sample_ids[r];
    for (std::size_t c = 0; c < ds.matrix.cols(); ++c)
      out << ',' << static_cast<int>(ds.matrix.at(r, c));
    out << ',' << ds.label_vocabulary[ds.labels[r]] << '\n';
  }
}

inline constexpr int kMatrixCacheVersion = 1;

inline void save_matrix_cache(const FeatureMatrix& fm,
                              const std::string& manifest_path,
                              const std::string& array_path) {
  std::ofstream manifest(manifest_path);
  if (!manifest) throw data_error("FileOpen", manifest_path);
  manifest << "popgen-matrix-cache v" << kMatrixCacheVersion << "\n";
  manifest << "rows " << fm.rows() << "\ncols " << fm.cols() << "\n";
  manifest << "samples";
  for (const auto& s : fm.sample_ids) manifest << ' ' << s;
  manifest << "\nvariants";
  for (const auto& k : fm.variant_keys)
    manifest << ' ' << k.chrom << ':' << k.pos << ':' << k.id;
  manifest << "\n";

  std::ofstream array(array_path, std::ios::binary);
  if (!array) throw data_error("FileOpen", array_path);
  array.write(reinterpret_cast<const char*>(fm.values.data()),
              static_cast<std::streamsize>(fm.values.size()));
}

inline FeatureMatrix load_matrix_cache(const std::string& manifest_path,
                                       const std::string& array_path) {
  std::ifstream manifest(manifest_path);
  if (!manifest) throw data_error("FileOpen", manifest_path);
  std::string magic, version;
  manifest >> magic >> version;
  if (magic != "popgen-matrix-cache" ||
      version != "v" + std::to_string(kMatrixCacheVersion))
    throw data_error("VersionMismatch", "matrix cache " + magic + " " + version);
  FeatureMatrix fm;
  std::string tag;
  std::size_t rows = 0, cols = 0;
  manifest >> tag >> rows >> tag >> cols >> tag;
  fm.sample_ids.resize(rows);
  for (auto& s : fm.sample_ids) manifest >> s;
  manifest >> tag;
  fm.variant_keys.resize(cols);
  for (auto& k : fm.variant_keys) {
    std::string token;
    manifest >> token;
    const std::size_t p1 = token.find(':');
    const std::size_t p2 = token.find(':', p1 + 1);
    if (p1 == std::string::npos || p2 == std::string::npos)
      throw data_error("CorruptArtifact", "bad variant key " + token);
    k.chrom = token.substr(0, p1);
    k.pos = std::stoll(token.substr(p1 + 1, p2 - p1 - 1));
    k.id = token.substr(p2 + 1);
  }
  std::ifstream array(array_path, std::ios::binary);
  if (!array) throw data_error("FileOpen", array_path);
  fm.values.resize(rows * cols);
  array.read(reinterpret_cast<char*>(fm.values.data()),
             static_cast<std::streamsize>(fm.values.size()));
  if (static_cast<std::size_t>(array.gcount()) != fm.values.size())
    throw data_error("CorruptArtifact", "matrix cache array truncated");
  return fm;
}

}  // namespace popgen
