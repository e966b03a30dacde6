// SPDX-License-Identifier: Apache-2.0
#include "poolnet/data.hpp"

#include <algorithm>
#include <fstream>
#include <optional>

#include <json.hpp>

#include "poolnet/errors.hpp"

namespace poolnet {

DomainCatalog::DomainCatalog(std::vector<AttributeRecord> records) {
  for (auto& r : records) {
    if (r.attribute.empty()) throw ArgumentError("catalog: record with empty attribute label");
    sources_.insert(r.source);
    by_attribute_[r.attribute].push_back(std::move(r));
    ++size_;
  }
}

std::vector<std::string> DomainCatalog::attributes() const {
  std::vector<std::string> out;
  out.reserve(by_attribute_.size());
  for (const auto& [name, _] : by_attribute_) out.push_back(name);
  return out;
}

std::vector<AttributeRecord> DomainCatalog::records() const {
  std::vector<AttributeRecord> out;
  out.reserve(size_);
  for (const auto& [_, recs] : by_attribute_) out.insert(out.end(), recs.begin(), recs.end());
  return out;
}

InputFormat parse_input_format(const std::string& name) {
  if (name == "csv" || name == "delimited") return InputFormat::delimited;
  if (name == "jsonl" || name == "record-per-line") return InputFormat::record_per_line;
  throw ArgumentError("unknown input format '" + name + "' (expected csv or jsonl)");
}

namespace {

struct CsvRow {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

// Reads one RFC 4180 record; quoted fields may span lines. Returns nullopt at EOF.
std::optional<CsvRow> read_csv_row(std::istream& in, std::size_t& line) {
  std::string text;
  if (!std::getline(in, text)) return std::nullopt;
  ++line;
  CsvRow row;
  row.line = line;
  std::string field;
  bool quoted = false;
  bool field_was_quoted = false;
  for (;;) {
    if (!quoted && !text.empty() && text.back() == '\r') text.pop_back();
    for (std::size_t i = 0; i < text.size(); ++i) {
      const char ch = text[i];
      if (quoted) {
        if (ch == '"') {
          if (i + 1 < text.size() && text[i + 1] == '"') {
            field.push_back('"');
            ++i;
          } else {
            quoted = false;
          }
        } else {
          field.push_back(ch);
        }
      } else if (ch == '"' && field.empty() && !field_was_quoted) {
        quoted = true;
        field_was_quoted = true;
      } else if (ch == ',') {
        row.fields.push_back(std::move(field));
        field.clear();
        field_was_quoted = false;
      } else {
        field.push_back(ch);
      }
    }
    if (!quoted) break;
    // Newline inside a quoted field.
    if (!std::getline(in, text)) throw DataError("unterminated quoted field", row.line);
    ++line;
    field.push_back('\n');
  }
  if (quoted) throw DataError("unterminated quoted field", row.line);
  row.fields.push_back(std::move(field));
  return row;
}

std::vector<AttributeRecord> ingest_csv(std::istream& in) {
  std::size_t line = 0;
  auto header = read_csv_row(in, line);
  if (!header) throw ArgumentError("ingest: input is empty");
  // Tolerate a UTF-8 byte order mark on the header.
  if (!header->fields.empty() && header->fields[0].starts_with("\xEF\xBB\xBF")) {
    header->fields[0].erase(0, 3);
  }
  auto column = [&](const std::string& name) {
    const auto it = std::find(header->fields.begin(), header->fields.end(), name);
    if (it == header->fields.end()) throw DataError("header lacks a '" + name + "' column", header->line);
    return static_cast<std::size_t>(it - header->fields.begin());
  };
  const std::size_t source_col = column("source");
  const std::size_t attribute_col = column("attribute");
  const std::size_t value_col = column("value");

  std::vector<AttributeRecord> out;
  while (auto row = read_csv_row(in, line)) {
    if (row->fields.size() == 1 && row->fields[0].empty()) continue;  // blank line
    auto get = [&](std::size_t col, const char* name) -> std::string& {
      if (col >= row->fields.size()) throw DataError(std::string("missing field '") + name + "'", row->line);
      return row->fields[col];
    };
    AttributeRecord rec{get(source_col, "source"), get(attribute_col, "attribute"), get(value_col, "value")};
    if (rec.attribute.empty()) throw DataError("empty attribute label", row->line);
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<AttributeRecord> ingest_jsonl(std::istream& in) {
  std::vector<AttributeRecord> out;
  std::string text;
  std::size_t line = 0;
  bool saw_content = false;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    saw_content = true;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(std::string("malformed JSON: ") + e.what(), line);
    }
    if (!obj.is_object()) throw DataError("expected a JSON object", line);
    auto get = [&](const char* key) {
      const auto it = obj.find(key);
      if (it == obj.end()) throw DataError(std::string("missing field '") + key + "'", line);
      if (!it->is_string()) throw DataError(std::string("field '") + key + "' is not a string", line);
      return it->get<std::string>();
    };
    AttributeRecord rec{get("source"), get("attribute"), get("value")};
    if (rec.attribute.empty()) throw DataError("empty attribute label", line);
    out.push_back(std::move(rec));
  }
  if (!saw_content) throw ArgumentError("ingest: input is empty");
  return out;
}

std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos && !field.empty()) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::vector<AttributeRecord> ingest(std::istream& in, InputFormat format) {
  return format == InputFormat::delimited ? ingest_csv(in) : ingest_jsonl(in);
}

std::vector<AttributeRecord> ingest(const std::filesystem::path& path, InputFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("ingest: cannot open '" + path.string() + "'");
  try {
    return ingest(in, format);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what(), 0);
  }
}

void write_records(std::ostream& out, std::span<const AttributeRecord> records, InputFormat format) {
  if (format == InputFormat::delimited) {
    out << "source,attribute,value\n";
    for (const auto& r : records) {
      out << csv_quote(r.source) << ',' << csv_quote(r.attribute) << ',' << csv_quote(r.value) << '\n';
    }
    return;
  }
  for (const auto& r : records) {
    nlohmann::json obj = {{"source", r.source}, {"attribute", r.attribute}, {"value", r.value}};
    out << obj.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
  }
}

// ---------------------------------------------------------------------------

std::u32string decode_utf8(std::string_view bytes) {
  constexpr char32_t replacement = 0xFFFD;
  std::u32string out;
  out.reserve(bytes.size());
  std::size_t i = 0;
  while (i < bytes.size()) {
    const auto b0 = static_cast<unsigned char>(bytes[i]);
    int extra;
    char32_t cp;
    char32_t min;
    if (b0 < 0x80) {
      out.push_back(b0);
      ++i;
      continue;
    } else if ((b0 & 0xE0) == 0xC0) {
      extra = 1, cp = b0 & 0x1F, min = 0x80;
    } else if ((b0 & 0xF0) == 0xE0) {
      extra = 2, cp = b0 & 0x0F, min = 0x800;
    } else if ((b0 & 0xF8) == 0xF0) {
      extra = 3, cp = b0 & 0x07, min = 0x10000;
    } else {
      out.push_back(replacement);
      ++i;
      continue;
    }
    std::size_t j = 1;
    for (; j <= static_cast<std::size_t>(extra) && i + j < bytes.size(); ++j) {
      const auto b = static_cast<unsigned char>(bytes[i + j]);
      if ((b & 0xC0) != 0x80) break;
      cp = (cp << 6) | (b & 0x3F);
    }
    if (j != static_cast<std::size_t>(extra) + 1 || cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      out.push_back(replacement);
      i += j;
      continue;
    }
    out.push_back(cp);
    i += j;
  }
  return out;
}

std::string encode_utf8(std::u32string_view code_points) {
  std::string out;
  out.reserve(code_points.size());
  for (char32_t cp : code_points) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

CharVocabulary::CharVocabulary(std::vector<char32_t> characters) : characters_(std::move(characters)) {
  std::sort(characters_.begin(), characters_.end());
  characters_.erase(std::unique(characters_.begin(), characters_.end()), characters_.end());
}

int CharVocabulary::index_of(char32_t c) const {
  const auto it = std::lower_bound(characters_.begin(), characters_.end(), c);
  if (it == characters_.end() || *it != c) return kUnkIndex;
  return static_cast<int>(it - characters_.begin()) + kReservedIndices;
}

char32_t CharVocabulary::character_at(int index) const {
  if (index < kReservedIndices || index >= size()) {
    throw VocabularyError("vocabulary: index " + std::to_string(index) + " is not a character");
  }
  return characters_[static_cast<std::size_t>(index - kReservedIndices)];
}

CharVocabulary build_vocab(std::span<const AttributeRecord> records) {
  std::vector<char32_t> chars;
  for (const auto& r : records) {
    const std::u32string cps = decode_utf8(r.value);
    chars.insert(chars.end(), cps.begin(), cps.end());
  }
  return CharVocabulary(std::move(chars));
}

std::vector<int> encode(const CharVocabulary& vocab, std::string_view value) {
  const std::u32string cps = decode_utf8(value);
  std::vector<int> out;
  out.reserve(cps.size() + 2);
  out.push_back(kBosIndex);
  for (char32_t c : cps) out.push_back(vocab.index_of(c));
  out.push_back(kEosIndex);
  return out;
}

std::string decode(const CharVocabulary& vocab, std::span<const int> indices) {
  std::u32string cps;
  for (int idx : indices) {
    if (idx == kBosIndex || idx == kEosIndex) continue;
    cps.push_back(idx == kUnkIndex ? U'�' : vocab.character_at(idx));
  }
  return encode_utf8(cps);
}

// ---------------------------------------------------------------------------

std::vector<std::string> sources_of(std::span<const AttributeRecord> records) {
  std::set<std::string> s;
  for (const auto& r : records) s.insert(r.source);
  return {s.begin(), s.end()};
}

SourceSplit split_by_source(std::span<const AttributeRecord> records, const std::string& test_source) {
  std::vector<AttributeRecord> train, test;
  for (const auto& r : records) (r.source == test_source ? test : train).push_back(r);
  if (test.empty()) throw ArgumentError("split: unknown source '" + test_source + "'");
  if (train.empty()) throw ArgumentError("split: no training sources remain besides '" + test_source + "'");
  return {DomainCatalog(std::move(train)), std::move(test)};
}

}  // namespace poolnet
