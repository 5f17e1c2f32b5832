#pragma once

#include <zlib.h>

#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "popgen/common.hpp"

namespace popgen {

// ---------------------------------------------------------------------------
// Line sources. Parsing works off a pull-based line stream so plain text,
// gzip files and in-memory buffers all go through the same code path.
// ---------------------------------------------------------------------------

class LineSource {
 public:
  virtual ~LineSource() = default;
  // Returns false at end of input. Strips trailing \r and \n.
  virtual bool next_line(std::string& out) = 0;
};

class IstreamLineSource : public LineSource {
 public:
  explicit IstreamLineSource(std::istream& in) : in_(in) {}
  bool next_line(std::string& out) override {
    if (!std::getline(in_, out)) return false;
    if (!out.empty() && out.back() == '\r') out.pop_back();
    return true;
  }

 private:
  std::istream& in_;
};

class StringLineSource : public LineSource {
 public:
  explicit StringLineSource(std::string text)
      : buf_(std::move(text)), in_(buf_) {}
  bool next_line(std::string& out) override {
    if (!std::getline(in_, out)) return false;
    if (!out.empty() && out.back() == '\r') out.pop_back();
    return true;
  }

 private:
  std::string buf_;
  std::istringstream in_;
};

// Reads a file through zlib; handles both gzip and plain text transparently
// (gzread passes uncompressed data through unchanged).
class GzFileLineSource : public LineSource {
 public:
  explicit GzFileLineSource(const std::string& path) {
    file_ = gzopen(path.c_str(), "rb");
    if (!file_) throw data_error("FileOpen", "cannot open " + path);
  }
  ~GzFileLineSource() override {
    if (file_) gzclose(file_);
  }
  GzFileLineSource(const GzFileLineSource&) = delete;
  GzFileLineSource& operator=(const GzFileLineSource&) = delete;

  bool next_line(std::string& out) override {
    out.clear();
    char chunk[4096];
    bool got_any = false;
    while (true) {
      if (gzgets(file_, chunk, sizeof(chunk)) == nullptr) return got_any;
      got_any = true;
      out += chunk;
      if (!out.empty() && out.back() == '\n') {
        out.pop_back();
        if (!out.empty() && out.back() == '\r') out.pop_back();
        return true;
      }
      // line longer than chunk, keep reading
    }
  }

 private:
  gzFile file_ = nullptr;
};

inline std::unique_ptr<LineSource> open_line_source(const std::string& path) {
  return std::make_unique<GzFileLineSource>(path);
}

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct GenotypeCall {
  // Allele indices, 0 = reference; -1 marks a missing allele (".").
  std::vector<int> alleles;
  bool phased = false;

  bool has_missing() const {
    for (int a : alleles)
      if (a < 0) return true;
    return false;
  }
};

struct VariantRecord {
  std::string chrom;
  std::int64_t pos = 0;  // 1-based
  std::string id;
  std::string ref_allele;
  std::vector<std::string> alt_alleles;
  std::map<std::string, std::string> info;
  std::vector<GenotypeCall> calls;
};

struct PanelEntry {
  std::string sample_id;
  std::string population;
  std::string super_population;
  std::string gender;
};

// ---------------------------------------------------------------------------
// Panel parsing
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string_view> split_view(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t p = s.find(sep, start);
    if (p == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, p - start));
    start = p + 1;
  }
}

inline std::vector<std::string_view> split_whitespace(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

}  // namespace detail

// Whitespace-separated panel file, 4+ columns; extra columns are ignored.
// A header line whose first token is "sample" is skipped.
inline std::vector<PanelEntry> parse_panel(LineSource& src) {
  std::vector<PanelEntry> out;
  std::unordered_set<std::string> seen;
  std::string line;
  bool first = true;
  while (src.next_line(line)) {
    auto tokens = detail::split_whitespace(line);
    if (tokens.empty()) continue;
    if (first && tokens[0] == "sample") {
      first = false;
      continue;
    }
    first = false;
    if (tokens.size() < 4)
      throw data_error("MalformedPanelLine",
                       "expected at least 4 columns: " + line);
    PanelEntry e{std::string(tokens[0]), std::string(tokens[1]),
                 std::string(tokens[2]), std::string(tokens[3])};
    if (e.sample_id.empty())
      throw data_error("MalformedPanelLine", "empty sample id");
    if (!seen.insert(e.sample_id).second)
      throw data_error("DuplicateSample", e.sample_id);
    out.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------
// VCF parsing (streaming)
// ---------------------------------------------------------------------------

namespace detail {

inline GenotypeCall parse_gt(std::string_view gt, std::size_t n_alt) {
  GenotypeCall call;
  call.phased = gt.find('|') != std::string_view::npos;
  std::size_t start = 0;
  while (start <= gt.size()) {
    std::size_t p = gt.find_first_of("|/", start);
    std::string_view tok = (p == std::string_view::npos)
                               ? gt.substr(start)
                               : gt.substr(start, p - start);
    if (tok == ".") {
      call.alleles.push_back(-1);
    } else {
      int idx = -1;
      auto [ptr, ec] =
          std::from_chars(tok.data(), tok.data() + tok.size(), idx);
      if (ec != std::errc() || ptr != tok.data() + tok.size() || idx < 0)
        throw data_error("BadGenotypeToken", std::string(gt));
      if (static_cast<std::size_t>(idx) > n_alt)
        throw data_error("BadGenotypeToken",
                         "allele index out of range: " + std::string(gt));
      call.alleles.push_back(idx);
    }
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  if (call.alleles.empty())
    throw data_error("BadGenotypeToken", std::string(gt));
  return call;
}

inline std::map<std::string, std::string> parse_info(std::string_view info) {
  std::map<std::string, std::string> out;
  if (info == ".") return out;
  for (auto field : split_view(info, ';')) {
    if (field.empty()) continue;
    std::size_t eq = field.find('=');
    if (eq == std::string_view::npos)
      out.emplace(std::string(field), "");
    else
      out.emplace(std::string(field.substr(0, eq)),
                  std::string(field.substr(eq + 1)));
  }
  return out;
}

}  // namespace detail

// Streaming single-pass VCF reader. Construction consumes the meta lines and
// the #CHROM header; next() yields one record per data line.
class VcfParser {
 public:
  explicit VcfParser(LineSource& src) : src_(src) {
    std::string line;
    while (src_.next_line(line)) {
      if (line.rfind("##", 0) == 0) continue;
      if (line.rfind("#CHROM", 0) == 0) {
        auto cols = detail::split_view(line, '\t');
        if (cols.size() < 8)
          throw data_error("MissingHeader", "truncated #CHROM header");
        for (std::size_t i = 9; i < cols.size(); ++i)
          samples_.emplace_back(cols[i]);
        return;
      }
      throw data_error("MissingHeader",
                       "data line before #CHROM header: " + line);
    }
    throw data_error("MissingHeader", "no #CHROM header found");
  }

  const std::vector<std::string>& sample_names() const { return samples_; }

  std::optional<VariantRecord> next() {
    std::string line;
    while (src_.next_line(line)) {
      if (line.empty()) continue;
      return parse_data_line(line);
    }
    return std::nullopt;
  }

 private:
  VariantRecord parse_data_line(const std::string& line) const {
    auto cols = detail::split_view(line, '\t');
    const std::size_t expected =
        samples_.empty() ? 8 : 9 + samples_.size();
    if (cols.size() < expected)
      throw data_error("ColumnCountMismatch",
                       "expected " + std::to_string(expected) + " columns, got " +
                           std::to_string(cols.size()));

    VariantRecord rec;
    rec.chrom = std::string(cols[0]);
    {
      std::int64_t pos = 0;
      auto [ptr, ec] =
          std::from_chars(cols[1].data(), cols[1].data() + cols[1].size(), pos);
      if (ec != std::errc() || ptr != cols[1].data() + cols[1].size() ||
          pos < 1)
        throw data_error("BadPosition", std::string(cols[1]));
      rec.pos = pos;
    }
    rec.id = std::string(cols[2]);
    rec.ref_allele = std::string(cols[3]);
    for (auto alt : detail::split_view(cols[4], ','))
      rec.alt_alleles.emplace_back(alt);
    if (rec.alt_alleles.empty() ||
        (rec.alt_alleles.size() == 1 && rec.alt_alleles[0].empty()))
      throw data_error("ColumnCountMismatch", "empty ALT column");
    rec.info = detail::parse_info(cols[7]);

    if (!samples_.empty()) {
      auto format_keys = detail::split_view(cols[8], ':');
      if (format_keys.empty() || format_keys[0] != "GT")
        throw data_error("BadGenotypeToken",
                         "FORMAT must begin with GT: " + std::string(cols[8]));
      rec.calls.reserve(samples_.size());
      for (std::size_t s = 0; s < samples_.size(); ++s) {
        std::string_view cell = cols[9 + s];
        std::size_t colon = cell.find(':');
        std::string_view gt =
            colon == std::string_view::npos ? cell : cell.substr(0, colon);
        rec.calls.push_back(detail::parse_gt(gt, rec.alt_alleles.size()));
      }
    }
    return rec;
  }

  LineSource& src_;
  std::vector<std::string> samples_;
};

// Formats the supported field subset of a record back into a VCF data line.
inline std::string format_vcf_line(const VariantRecord& rec) {
  std::ostringstream out;
  out << rec.chrom << '\t' << rec.pos << '\t' << rec.id << '\t'
      << rec.ref_allele << '\t';
  for (std::size_t i = 0; i < rec.alt_alleles.size(); ++i) {
    if (i) out << ',';
    out << rec.alt_alleles[i];
  }
  out << "\t.\t.\t";
  if (rec.info.empty()) {
    out << '.';
  } else {
    bool first = true;
    for (const auto& [k, v] : rec.info) {
      if (!first) out << ';';
      first = false;
      out << k;
      if (!v.empty()) out << '=' << v;
    }
  }
  if (!rec.calls.empty()) {
    out << "\tGT";
    for (const auto& call : rec.calls) {
      out << '\t';
      const char sep = call.phased ? '|' : '/';
      for (std::size_t i = 0; i < call.alleles.size(); ++i) {
        if (i) out << sep;
        if (call.alleles[i] < 0)
          out << '.';
        else
          out << call.alleles[i];
      }
    }
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Small numeric helpers
// ---------------------------------------------------------------------------

// Number of non-reference alleles in a call; {0,1,2} for diploid data.
inline int alt_allele_count(const GenotypeCall& call) {
  int count = 0;
  for (int a : call.alleles) {
    if (a < 0) throw data_error("MissingAllele", "call has missing alleles");
    if (a >= 1) ++count;
  }
  return count;
}

inline double allele_frequency(std::int64_t ac, std::int64_t an) {
  if (an <= 0) throw numeric_error("ZeroAlleleNumber", "AN must be positive");
  if (ac < 0 || ac > an)
    throw numeric_error("CountExceedsNumber", "AC out of [0, AN]");
  return static_cast<double>(ac) / static_cast<double>(an);
}

}  // namespace popgen
