#include "vtckit/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "vtckit/errors.hpp"

namespace vtckit::dataset {

namespace {

constexpr const char* kHeader = "speaker_id,wav_path,tms,cohort,severity,tfc,dcl";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(field);
  return fields;
}

double parse_real(const std::string& text, const std::string& context) {
  try {
    std::size_t used = 0;
    double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("cannot parse number '" + text + "' in " + context);
  }
}

std::optional<int> parse_optional_int(const std::string& text,
                                      const std::string& context) {
  if (text.empty()) return std::nullopt;
  int v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ValidationError("cannot parse integer '" + text + "' in " + context);
  }
  return v;
}

std::string format_real(double v) {
  // Shortest representation that round-trips, so save/load is lossless.
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::string to_string(Cohort cohort) {
  return cohort == Cohort::control ? "control" : "hd";
}

std::string to_string(Severity severity) {
  switch (severity) {
    case Severity::control: return "control";
    case Severity::premanifest: return "premanifest";
    case Severity::early: return "early";
    case Severity::late: return "late";
  }
  return "control";
}

Cohort cohort_from_string(const std::string& text) {
  if (text == "control") return Cohort::control;
  if (text == "hd") return Cohort::hd;
  throw ValidationError("unknown cohort '" + text + "'");
}

Severity severity_from_string(const std::string& text) {
  if (text == "control") return Severity::control;
  if (text == "premanifest") return Severity::premanifest;
  if (text == "early") return Severity::early;
  if (text == "late") return Severity::late;
  throw ValidationError("unknown severity '" + text + "'");
}

const SpeakerRecord* DatasetManifest::find(const std::string& speaker_id) const {
  for (const auto& record : records) {
    if (record.speaker_id == speaker_id) return &record;
  }
  return nullptr;
}

Severity derive_severity(Cohort cohort, std::optional<int> dcl,
                         std::optional<int> tfc) {
  if (cohort == Cohort::control) return Severity::control;
  if (!dcl) throw ValidationError("hd record requires dcl");
  if (*dcl < 0 || *dcl > 4) {
    throw ValidationError("dcl " + std::to_string(*dcl) + " out of range 0..4");
  }
  if (*dcl < 4) return Severity::premanifest;
  if (!tfc) throw ValidationError("manifest hd record (dcl=4) requires tfc");
  if (*tfc < 0 || *tfc > 13) {
    throw ValidationError("tfc " + std::to_string(*tfc) + " out of range 0..13");
  }
  return *tfc >= 7 ? Severity::early : Severity::late;
}

void validate_record(const SpeakerRecord& record) {
  auto fail = [&](const std::string& field, const std::string& why) {
    throw ValidationError("speaker '" + record.speaker_id + "' field " + field +
                          ": " + why);
  };
  if (record.speaker_id.empty()) fail("speaker_id", "empty");
  if (!(record.tms >= 0.0 && record.tms <= 128.0)) {
    fail("tms", "value " + format_real(record.tms) + " outside [0, 128]");
  }
  const bool severity_control = record.severity == Severity::control;
  const bool cohort_control = record.cohort == Cohort::control;
  if (severity_control != cohort_control) {
    fail("severity", "severity 'control' must pair with cohort 'control'");
  }
  if (record.tfc && (*record.tfc < 0 || *record.tfc > 13)) {
    fail("tfc", "value " + std::to_string(*record.tfc) + " outside 0..13");
  }
  if (record.dcl && (*record.dcl < 0 || *record.dcl > 4)) {
    fail("dcl", "value " + std::to_string(*record.dcl) + " outside 0..4");
  }
  // Cross-check stated severity against the staging rules when derivable.
  if (record.cohort == Cohort::hd && record.dcl &&
      (*record.dcl < 4 || record.tfc)) {
    const Severity derived = derive_severity(record.cohort, record.dcl, record.tfc);
    if (derived != record.severity) {
      fail("severity", "stated '" + to_string(record.severity) +
                           "' but dcl/tfc derive '" + to_string(derived) + "'");
    }
  }
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path.string());

  DatasetManifest manifest;
  std::string line;
  bool saw_header = false;
  std::size_t line_no = 0;
  std::set<std::string> ids;
  std::set<std::string> paths;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string hint_key = "# sample_rate_hint=";
      if (line.rfind(hint_key, 0) == 0) {
        manifest.sample_rate_hint =
            *parse_optional_int(line.substr(hint_key.size()), "sample_rate_hint");
      }
      continue;
    }
    if (!saw_header) {
      if (line != kHeader) {
        const auto expected = split_csv_line(kHeader);
        const auto got = split_csv_line(line);
        for (const auto& col : expected) {
          bool present = false;
          for (const auto& g : got) present |= (g == col);
          if (!present) {
            throw SchemaError("manifest missing column '" + col + "'");
          }
        }
        for (const auto& g : got) {
          bool known = false;
          for (const auto& col : expected) known |= (g == col);
          if (!known) {
            throw SchemaError("manifest has unexpected column '" + g + "'");
          }
        }
        throw SchemaError("manifest header column order must be: " +
                          std::string(kHeader));
      }
      saw_header = true;
      continue;
    }

    const auto fields = split_csv_line(line);
    if (fields.size() != 7) {
      throw SchemaError("manifest line " + std::to_string(line_no) + " has " +
                        std::to_string(fields.size()) + " fields, expected 7");
    }
    const std::string context = "manifest line " + std::to_string(line_no);
    SpeakerRecord record;
    record.speaker_id = fields[0];
    record.wav_path = fields[1];
    record.tms = parse_real(fields[2], context);
    record.cohort = cohort_from_string(fields[3]);
    record.severity = severity_from_string(fields[4]);
    record.tfc = parse_optional_int(fields[5], context + " tfc");
    record.dcl = parse_optional_int(fields[6], context + " dcl");
    validate_record(record);

    if (!ids.insert(record.speaker_id).second) {
      throw ValidationError("duplicate speaker_id '" + record.speaker_id + "'");
    }
    if (!paths.insert(record.wav_path.string()).second) {
      throw ValidationError("duplicate wav_path '" + record.wav_path.string() + "'");
    }
    manifest.records.push_back(std::move(record));
  }
  if (!saw_header) throw SchemaError("manifest is empty: " + path.string());
  return manifest;
}

void save_manifest(const DatasetManifest& manifest,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);  // binary keeps LF endings
  if (!out) throw IoError("cannot write manifest: " + path.string());
  if (manifest.sample_rate_hint) {
    out << "# sample_rate_hint=" << *manifest.sample_rate_hint << "\n";
  }
  out << kHeader << "\n";
  for (const auto& record : manifest.records) {
    out << record.speaker_id << ',' << record.wav_path.string() << ','
        << format_real(record.tms) << ',' << to_string(record.cohort) << ','
        << to_string(record.severity) << ',';
    if (record.tfc) out << *record.tfc;
    out << ',';
    if (record.dcl) out << *record.dcl;
    out << "\n";
  }
  if (!out) throw IoError("failed writing manifest: " + path.string());
}

}  // namespace vtckit::dataset
