// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "poolnet/errors.hpp"
#include "poolnet/markers.hpp"

namespace poolnet {

/// One observed (source, attribute, value) triple. `value` is kept byte-for-byte.
struct AttributeRecord {
  std::string source;
  std::string attribute;
  std::string value;

  friend bool operator==(const AttributeRecord&, const AttributeRecord&) = default;
};

/// Labeled training corpus: records grouped by attribute label.
class DomainCatalog {
 public:
  DomainCatalog() = default;
  explicit DomainCatalog(std::vector<AttributeRecord> records);

  /// Attribute labels in sorted order.
  std::vector<std::string> attributes() const;
  const std::set<std::string>& sources() const { return sources_; }
  const std::map<std::string, std::vector<AttributeRecord>>& by_attribute() const { return by_attribute_; }

  /// Every record, ordered by attribute label and then input order.
  std::vector<AttributeRecord> records() const;
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

 private:
  std::map<std::string, std::vector<AttributeRecord>> by_attribute_;
  std::set<std::string> sources_;
  std::size_t size_ = 0;
};

enum class InputFormat { delimited, record_per_line };

InputFormat parse_input_format(const std::string& name);

/// Reads `source,attribute,value` CSV (header row required, RFC 4180 quoting)
/// or one JSON object per line with keys source/attribute/value.
/// Throws DataError (with line number) on malformed rows and ArgumentError on empty input.
std::vector<AttributeRecord> ingest(const std::filesystem::path& path, InputFormat format);
std::vector<AttributeRecord> ingest(std::istream& in, InputFormat format);

/// Writes records in the same formats ingest() reads.
void write_records(std::ostream& out, std::span<const AttributeRecord> records, InputFormat format);

// ---------------------------------------------------------------------------
// Characters

/// Decodes UTF-8 into code points; malformed bytes become U+FFFD.
std::u32string decode_utf8(std::string_view bytes);
std::string encode_utf8(std::u32string_view code_points);

/// Character dictionary. Indices 0..2 are BOS, EOS and UNK; characters follow
/// in ascending code-point order.
class CharVocabulary {
 public:
  CharVocabulary() = default;
  /// `characters` need not be sorted or unique.
  explicit CharVocabulary(std::vector<char32_t> characters);

  int size() const { return static_cast<int>(characters_.size()) + kReservedIndices; }
  int index_of(char32_t c) const;
  /// Code point for a character index; throws VocabularyError for marker or out-of-range indices.
  char32_t character_at(int index) const;
  const std::vector<char32_t>& characters() const { return characters_; }

  friend bool operator==(const CharVocabulary&, const CharVocabulary&) = default;

 private:
  std::vector<char32_t> characters_;
};

/// Vocabulary over the characters of the given (training) records.
CharVocabulary build_vocab(std::span<const AttributeRecord> records);

/// [BOS] + one index per code point (UNK if unseen) + [EOS].
std::vector<int> encode(const CharVocabulary& vocab, std::string_view value);

/// Inverse of encode(): drops markers, renders UNK as U+FFFD.
std::string decode(const CharVocabulary& vocab, std::span<const int> indices);

// ---------------------------------------------------------------------------
// Leave-one-source-out splitting

/// Sorted distinct source identifiers.
std::vector<std::string> sources_of(std::span<const AttributeRecord> records);

struct SourceSplit {
  DomainCatalog catalog;
  std::vector<AttributeRecord> test;
};

/// Catalog from every source except `test_source`; the test set is that source's records.
SourceSplit split_by_source(std::span<const AttributeRecord> records, const std::string& test_source);

}  // namespace poolnet
