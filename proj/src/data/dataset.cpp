#include "moodspring/data/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include "moodspring/data/csv.hpp"
#include "moodspring/error.hpp"
#include "moodspring/rng.hpp"

namespace moodspring::data {
namespace {

namespace fs = std::filesystem;

constexpr std::array<std::string_view, 5> kManifestColumns = {"id", "source", "emotion", "group", "modality"};

[[noreturn]] void format_error(std::size_t line, const std::string& what) {
  fail(ErrorCode::FormatError, "line " + std::to_string(line) + ": " + what);
}

bool parse_two_digits(std::string_view s, int& out) {
  if (s.size() != 2 || !std::isdigit(static_cast<unsigned char>(s[0])) ||
      !std::isdigit(static_cast<unsigned char>(s[1]))) {
    return false;
  }
  out = (s[0] - '0') * 10 + (s[1] - '0');
  return true;
}

}  // namespace

std::string_view to_string(Modality modality) {
  switch (modality) {
    case Modality::Audio: return "audio";
    case Modality::Text: return "text";
    case Modality::Embedding: return "embedding";
  }
  return "unknown";
}

std::optional<Modality> parse_modality(std::string_view name) {
  if (name == "audio") return Modality::Audio;
  if (name == "text") return Modality::Text;
  if (name == "embedding") return Modality::Embedding;
  return std::nullopt;
}

std::string Manifest::resolve(const ManifestRow& row) const {
  const fs::path p(row.source);
  if (p.is_absolute() || base_dir.empty()) return p.string();
  return (fs::path(base_dir) / p).string();
}

Manifest parse_manifest(std::string_view csv, const std::string& base_dir, bool check_files) {
  const auto records = parse_csv(csv);
  if (records.empty()) fail(ErrorCode::FormatError, "manifest: missing header");

  const auto& header = records.front();
  std::array<std::size_t, kManifestColumns.size()> column{};
  for (std::size_t c = 0; c < kManifestColumns.size(); ++c) {
    const auto it = std::find(header.fields.begin(), header.fields.end(), kManifestColumns[c]);
    if (it == header.fields.end()) {
      format_error(header.line, "header is missing column '" + std::string(kManifestColumns[c]) + "'");
    }
    column[c] = static_cast<std::size_t>(it - header.fields.begin());
  }

  Manifest m;
  m.base_dir = base_dir;
  std::set<std::string> seen;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    for (std::size_t c = 0; c < kManifestColumns.size(); ++c) {
      if (column[c] >= rec.fields.size()) {
        format_error(rec.line, "missing column '" + std::string(kManifestColumns[c]) + "'");
      }
    }
    ManifestRow row;
    row.id = rec.fields[column[0]];
    row.source = rec.fields[column[1]];
    const auto& emotion = rec.fields[column[2]];
    const auto& group = rec.fields[column[3]];
    const auto& modality = rec.fields[column[4]];

    if (row.id.empty()) format_error(rec.line, "column 'id' is empty");
    if (!seen.insert(row.id).second) format_error(rec.line, "duplicate id '" + row.id + "'");
    const auto e = parse_emotion(emotion);
    if (!e) format_error(rec.line, "column 'emotion': unknown emotion '" + emotion + "'");
    const auto g = parse_group(group);
    if (!g) format_error(rec.line, "column 'group': unknown group '" + group + "'");
    const auto mod = parse_modality(modality);
    if (!mod) format_error(rec.line, "column 'modality': unknown modality '" + modality + "'");
    row.emotion = *e;
    row.group = *g;
    row.modality = *mod;
    if (row.modality == Modality::Audio && check_files && !fs::exists(m.resolve(row))) {
      format_error(rec.line, "audio file '" + m.resolve(row) + "' does not exist");
    }
    m.rows.push_back(std::move(row));
  }
  return m;
}

Manifest load_manifest(const std::string& path) {
  return parse_manifest(read_file(path), fs::path(path).parent_path().string(), true);
}

std::string format_manifest(const Manifest& manifest) {
  std::string out = "id,source,emotion,group,modality\n";
  for (const auto& row : manifest.rows) {
    out += csv_escape(row.id) + ',' + csv_escape(row.source) + ',' + std::string(to_string(row.emotion)) + ',' +
           std::string(to_string(row.group)) + ',' + std::string(to_string(row.modality)) + '\n';
  }
  return out;
}

void save_manifest(const std::string& path, const Manifest& manifest) {
  write_file(path, format_manifest(manifest));
}

std::string sample_key(std::string_view id) { return std::string(id.substr(0, id.find(':'))); }

RavdessInfo parse_ravdess_filename(std::string_view name) {
  const auto bad = [&] { fail(ErrorCode::FormatError, "not a RAVDESS file name: '" + std::string(name) + "'"); };
  const auto slash = name.find_last_of("/\\");
  if (slash != std::string_view::npos) name.remove_prefix(slash + 1);
  if (name.size() != 24 || name.substr(20) != ".wav") bad();

  std::array<int, 7> fields{};
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0 && name[i * 3 - 1] != '-') bad();
    if (!parse_two_digits(name.substr(i * 3, 2), fields[i])) bad();
  }
  if (fields[2] < 1 || fields[2] > static_cast<int>(kEmotionCount)) bad();
  if (fields[6] < 1) bad();

  RavdessInfo info{kAllEmotions[static_cast<std::size_t>(fields[2] - 1)], fields[6],
                   fields[6] % 2 == 1 ? Group::A : Group::B};
  return info;
}

FeatureVector EmbeddingTable::feature(std::string_view id) const {
  const auto it = index.find(std::string(id));
  if (it == index.end()) fail(ErrorCode::InvalidInput, "embedding table has no row '" + std::string(id) + "'");
  return FeatureVector{vectors[it->second], FeatureKind::ExternalEmbedding};
}

EmbeddingTable parse_embedding_table(std::string_view csv) {
  const auto records = parse_csv(csv);
  if (records.empty()) fail(ErrorCode::FormatError, "embedding table: missing header");
  const auto& header = records.front();
  if (header.fields.size() < 3 || header.fields[0] != "id" || header.fields[1] != "dim") {
    format_error(header.line, "embedding header must be id,dim,v0,...");
  }
  EmbeddingTable table;
  table.dim = header.fields.size() - 2;
  for (std::size_t j = 0; j < table.dim; ++j) {
    if (header.fields[j + 2] != "v" + std::to_string(j)) {
      format_error(header.line, "expected column 'v" + std::to_string(j) + "', found '" + header.fields[j + 2] + "'");
    }
  }

  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != table.dim + 2) {
      format_error(rec.line, "expected " + std::to_string(table.dim) + " values, found " +
                                 std::to_string(rec.fields.size() >= 2 ? rec.fields.size() - 2 : 0));
    }
    const std::string& id = rec.fields[0];
    if (id.empty()) format_error(rec.line, "empty id");
    if (rec.fields[1] != std::to_string(table.dim)) {
      format_error(rec.line, "dim field '" + rec.fields[1] + "' does not match header dim " + std::to_string(table.dim));
    }
    std::vector<double> values(table.dim);
    for (std::size_t j = 0; j < table.dim; ++j) {
      const std::string& text = rec.fields[j + 2];
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(text, &used);
      } catch (const std::exception&) {
        format_error(rec.line, "column v" + std::to_string(j) + ": not a number '" + text + "'");
      }
      if (used != text.size()) format_error(rec.line, "column v" + std::to_string(j) + ": not a number '" + text + "'");
      if (!std::isfinite(v)) format_error(rec.line, "column v" + std::to_string(j) + ": non-finite value '" + text + "'");
      values[j] = v;
    }
    if (!table.index.emplace(id, table.ids.size()).second) format_error(rec.line, "duplicate id '" + id + "'");
    table.ids.push_back(id);
    table.vectors.push_back(std::move(values));
  }
  return table;
}

EmbeddingTable load_embedding_table(const std::string& path) { return parse_embedding_table(read_file(path)); }

Split split(const Manifest& manifest, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    fail(ErrorCode::InvalidInput, "split: test fraction must lie in (0,1)");
  }
  const auto round_half_up = [](double x) { return static_cast<std::size_t>(std::floor(x + 0.5)); };

  // Rows of one multi-modal sample always land on the same side.
  std::vector<std::vector<std::size_t>> units;
  std::map<std::string, std::size_t> unit_of;
  for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
    const auto [it, fresh] = unit_of.emplace(sample_key(manifest.rows[i].id), units.size());
    if (fresh) units.emplace_back();
    units[it->second].push_back(i);
  }

  std::map<std::pair<std::size_t, Group>, std::vector<std::size_t>> strata;
  for (std::size_t u = 0; u < units.size(); ++u) {
    const auto& row = manifest.rows[units[u].front()];
    strata[{index_of(row.emotion), row.group}].push_back(u);
  }

  struct Plan {
    std::vector<std::size_t>* rows;
    std::size_t take;
    std::size_t lo;
    std::size_t hi;
    double ideal;
  };
  std::vector<Plan> plans;
  std::size_t total = 0;
  for (auto& [key, rows] : strata) {
    const std::size_t n = rows.size();
    const double ideal = static_cast<double>(n) * test_fraction;
    const std::size_t lo = n >= 2 ? 1 : 0;
    const std::size_t hi = n >= 2 ? n - 1 : n;
    const std::size_t take = std::clamp(round_half_up(ideal), lo, hi);
    plans.push_back({&rows, take, lo, hi, ideal});
    total += take;
  }

  const std::size_t target = round_half_up(static_cast<double>(units.size()) * test_fraction);
  while (total > target) {
    Plan* pick = nullptr;
    for (auto& p : plans) {
      if (p.take > p.lo && (!pick || p.ideal - static_cast<double>(p.take) < pick->ideal - static_cast<double>(pick->take))) {
        pick = &p;
      }
    }
    if (!pick) break;
    --pick->take;
    --total;
  }
  while (total < target) {
    Plan* pick = nullptr;
    for (auto& p : plans) {
      if (p.take < p.hi && (!pick || p.ideal - static_cast<double>(p.take) > pick->ideal - static_cast<double>(pick->take))) {
        pick = &p;
      }
    }
    if (!pick) break;
    ++pick->take;
    ++total;
  }

  Rng rng(seed);
  std::vector<bool> in_test(manifest.rows.size(), false);
  for (auto& p : plans) {
    std::vector<std::size_t> order = *p.rows;
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t i = 0; i < p.take; ++i) {
      for (std::size_t row : units[order[i]]) in_test[row] = true;
    }
  }

  Split out;
  out.train.base_dir = manifest.base_dir;
  out.test.base_dir = manifest.base_dir;
  for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
    (in_test[i] ? out.test : out.train).rows.push_back(manifest.rows[i]);
  }
  return out;
}

}  // namespace moodspring::data
