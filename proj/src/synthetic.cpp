// SPDX-License-Identifier: Apache-2.0
#include "poolnet/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <functional>
#include <map>

#include "poolnet/errors.hpp"
#include "poolnet/numerics.hpp"

namespace poolnet {

namespace {

using Renderer = std::function<std::string(Rng&, int variant)>;

int uniform_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(hi - lo + 1)));
}

template <std::size_t N>
const char* pick(Rng& rng, const std::array<const char*, N>& items) {
  return items[rng.uniform_index(N)];
}

std::string with_thousands(int value) {
  std::string digits = std::to_string(value);
  std::string out;
  const int n = static_cast<int>(digits.size());
  for (int i = 0; i < n; ++i) {
    if (i > 0 && (n - i) % 3 == 0) out.push_back(',');
    out.push_back(digits[static_cast<std::size_t>(i)]);
  }
  return out;
}

std::string format(const char* fmt, auto... args) {
  char buf[128];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

constexpr std::array<const char*, 12> kColors = {"black", "white", "silver", "gray",  "red",   "blue",
                                                 "green", "beige", "brown",  "gold", "orange", "maroon"};
constexpr std::array<const char*, 4> kZones = {"EDT", "EST", "PDT", "CST"};
constexpr std::array<const char*, 12> kMonths = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                 "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

std::string render_price(Rng& rng, int variant) {
  const int dollars = uniform_int(rng, 8000, 60000);
  switch (variant) {
    case 0: return "$" + with_thousands(dollars);
    case 1: return "$ " + with_thousands(dollars);
    default: return "$" + std::to_string(dollars) + ".00";
  }
}

std::string render_time(Rng& rng, int variant) {
  const int hour = uniform_int(rng, 1, 12);
  const int minute = uniform_int(rng, 0, 59);
  const bool pm = rng.bernoulli(0.5);
  const char* zone = pick(rng, kZones);
  switch (variant) {
    case 0: return format("%d:%02d %s %s", hour, minute, pm ? "pm" : "am", zone);
    case 1: return format("%d:%02d %s", pm ? hour % 12 + 12 : hour % 12, minute, zone);
    default: return format("%d:%02d %s %s", hour, minute, pm ? "PM" : "AM", zone);
  }
}

std::string render_color(Rng& rng, int variant) {
  const std::string base = pick(rng, kColors);
  switch (variant) {
    case 0: return base;
    case 1: return capitalize(base);
    default: return rng.bernoulli(0.5) ? capitalize(base) + " Metallic" : capitalize(base);
  }
}

std::string render_vin(Rng& rng, int /*variant*/) {
  static constexpr std::string_view alphabet = "ABCDEFGHJKLMNPRSTUVWXYZ0123456789";
  static constexpr std::string_view letters = "ABCDEFGHJKLMNPRSTUVWXYZ";
  std::string vin(17, ' ');
  for (char& ch : vin) ch = alphabet[rng.uniform_index(alphabet.size())];
  // Real VINs carry letters in the manufacturer prefix.
  vin[1] = letters[rng.uniform_index(letters.size())];
  return vin;
}

std::string render_mileage(Rng& rng, int variant) {
  const int miles = uniform_int(rng, 500, 150000);
  switch (variant) {
    case 0: return with_thousands(miles) + " mi";
    case 1: return std::to_string(miles) + " miles";
    default: return with_thousands(miles) + " Miles";
  }
}

std::string render_mpg(Rng& rng, int variant) {
  const int city = uniform_int(rng, 12, 35);
  const int hwy = city + uniform_int(rng, 3, 12);
  switch (variant) {
    case 0: return format("%d/%d", city, hwy);
    case 1: return format("%d city / %d hwy", city, hwy);
    default: return format("%d city / %d hwy EPA Fuel Economy Guide", city, hwy);
  }
}

std::string render_phone(Rng& rng, int variant) {
  const int area = uniform_int(rng, 201, 989);
  const int mid = uniform_int(rng, 200, 999);
  const int last = uniform_int(rng, 0, 9999);
  switch (variant) {
    case 0: return format("(%03d) %03d-%04d", area, mid, last);
    case 1: return format("%03d-%03d-%04d", area, mid, last);
    default: return format("%03d.%03d.%04d", area, mid, last);
  }
}

std::string render_date(Rng& rng, int variant) {
  const int year = uniform_int(rng, 1995, 2016);
  const int month = uniform_int(rng, 1, 12);
  const int day = uniform_int(rng, 1, 28);
  switch (variant) {
    case 0: return format("%04d-%02d-%02d", year, month, day);
    case 1: return format("%02d/%02d/%04d", month, day, year);
    default: return format("%s %d, %d", kMonths[static_cast<std::size_t>(month - 1)], day, year);
  }
}

std::string render_zip(Rng& rng, int variant) {
  const int zip = uniform_int(rng, 1000, 99950);
  if (variant == 1) return format("%05d-%04d", zip, uniform_int(rng, 0, 9999));
  return format("%05d", zip);
}

std::string render_doors(Rng& rng, int variant) {
  const int doors = rng.bernoulli(0.7) ? 4 : 2;
  switch (variant) {
    case 0: return format("%d doors", doors);
    case 1: return format("%d Door", doors);
    default: return format("%ddr", doors);
  }
}

const std::map<std::string, Renderer>& renderers() {
  static const std::map<std::string, Renderer> table = {
      {"price", render_price}, {"time", render_time},   {"color", render_color}, {"vin", render_vin},
      {"mileage", render_mileage}, {"mpg", render_mpg}, {"phone", render_phone}, {"date", render_date},
      {"zip", render_zip},     {"doors", render_doors},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& synthetic_attribute_kinds() {
  static const std::vector<std::string> kinds = [] {
    std::vector<std::string> k;
    for (const auto& [name, _] : renderers()) k.push_back(name);
    return k;
  }();
  return kinds;
}

std::vector<AttributeRecord> generate_synthetic(const SyntheticOptions& options) {
  if (options.sources < 1) throw ArgumentError("synthetic: need at least one source");
  if (options.records_per_source < 1) throw ArgumentError("synthetic: need at least one record per source");
  if (options.attributes.empty()) throw ArgumentError("synthetic: attribute list is empty");
  std::vector<const Renderer*> render;
  for (const auto& a : options.attributes) {
    const auto it = renderers().find(a);
    if (it == renderers().end()) throw ArgumentError("synthetic: unknown attribute kind '" + a + "'");
    render.push_back(&it->second);
  }

  Rng rng(options.seed);
  std::vector<AttributeRecord> out;
  out.reserve(static_cast<std::size_t>(options.sources) * static_cast<std::size_t>(options.records_per_source));
  for (int s = 0; s < options.sources; ++s) {
    const std::string source = "source" + std::to_string(s + 1);
    const int variant = s % 3;
    for (int j = 0; j < options.records_per_source; ++j) {
      const std::size_t a = static_cast<std::size_t>(j) % render.size();
      out.push_back({source, options.attributes[a], (*render[a])(rng, variant)});
    }
  }
  return out;
}

}  // namespace poolnet
