// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

#include "pstune/knobs.hpp"

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <set>
#include <sstream>

#include "pstune/errors.hpp"

namespace pstune {

namespace {

bool is_integral_value(double v) { return std::isfinite(v) && v == std::nearbyint(v); }

/* Round half to even, then clamp to the inclusive integer range [lo, hi]. */
std::int64_t round_clamp(double v, double lo, double hi) {
  double r = std::nearbyint(v);
  r = std::max(lo, std::min(hi, r));
  return static_cast<std::int64_t>(r);
}

[[noreturn]] void fail(const std::string& msg) { throw validation_error(msg); }

}  // namespace

std::size_t KnobSpec::encoded_width() const {
  return kind == KnobKind::Nominal ? levels.size() : 1;
}

KnobSpace::KnobSpace(std::vector<KnobSpec> knobs) : knobs_(std::move(knobs)) {
  std::set<std::string> seen;
  for (const auto& k : knobs_) {
    if (k.name.empty()) fail("knob name must be non-empty");
    if (!seen.insert(k.name).second) fail("duplicate knob name: " + k.name);
    switch (k.kind) {
      case KnobKind::IntegerRange:
        if (!is_integral_value(k.lo) || !is_integral_value(k.hi))
          fail("integer knob bounds must be integral: " + k.name);
        [[fallthrough]];
      case KnobKind::RealRange:
        if (!std::isfinite(k.lo) || !std::isfinite(k.hi) || !(k.lo < k.hi))
          fail("range knob needs finite lo < hi: " + k.name);
        if (!k.levels.empty()) fail("range knob must not list levels: " + k.name);
        break;
      case KnobKind::Ordinal:
      case KnobKind::Nominal: {
        if (k.levels.size() < 2) fail("categorical knob needs at least two levels: " + k.name);
        std::set<std::string> lv(k.levels.begin(), k.levels.end());
        if (lv.size() != k.levels.size()) fail("duplicate level in knob: " + k.name);
        break;
      }
      case KnobKind::Boolean:
        if (!k.levels.empty()) fail("boolean knob must not list levels: " + k.name);
        break;
    }
    width_ += k.encoded_width();
  }
}

const KnobSpec* KnobSpace::find(const std::string& name) const {
  for (const auto& k : knobs_)
    if (k.name == name) return &k;
  return nullptr;
}

std::uint64_t KnobSpace::finite_size() const {
  std::uint64_t n = 1;
  for (const auto& k : knobs_) {
    switch (k.kind) {
      case KnobKind::IntegerRange:
        n *= static_cast<std::uint64_t>(k.hi - k.lo) + 1;
        break;
      case KnobKind::RealRange:
        return 0;
      case KnobKind::Ordinal:
      case KnobKind::Nominal:
        n *= k.levels.size();
        break;
      case KnobKind::Boolean:
        n *= 2;
        break;
    }
  }
  return n;
}

namespace {

std::size_t level_rank(const KnobSpec& k, const std::string& v) {
  auto it = std::find(k.levels.begin(), k.levels.end(), v);
  if (it == k.levels.end()) fail("value '" + v + "' is not a level of knob " + k.name);
  return static_cast<std::size_t>(it - k.levels.begin());
}

}  // namespace

void validate_setting(const SystemSetting& setting, const KnobSpace& space) {
  for (const auto& [name, value] : setting)
    if (space.find(name) == nullptr) fail("setting has unknown knob: " + name);
  for (const auto& k : space.knobs()) {
    auto it = setting.find(k.name);
    if (it == setting.end()) fail("setting is missing knob: " + k.name);
    const KnobValue& v = it->second;
    switch (k.kind) {
      case KnobKind::IntegerRange: {
        const auto* p = std::get_if<std::int64_t>(&v);
        if (p == nullptr) fail("knob " + k.name + " requires an integer value");
        if (*p < static_cast<std::int64_t>(k.lo) || *p > static_cast<std::int64_t>(k.hi))
          fail("knob " + k.name + " value out of range");
        break;
      }
      case KnobKind::RealRange: {
        const auto* p = std::get_if<double>(&v);
        if (p == nullptr) fail("knob " + k.name + " requires a real value");
        if (!std::isfinite(*p) || *p < k.lo || *p > k.hi)
          fail("knob " + k.name + " value out of range");
        break;
      }
      case KnobKind::Ordinal:
      case KnobKind::Nominal: {
        const auto* p = std::get_if<std::string>(&v);
        if (p == nullptr) fail("knob " + k.name + " requires a level name");
        level_rank(k, *p);
        break;
      }
      case KnobKind::Boolean:
        if (std::get_if<bool>(&v) == nullptr) fail("knob " + k.name + " requires a boolean");
        break;
    }
  }
}

EncodedPoint encode_setting(const SystemSetting& setting, const KnobSpace& space, double loss,
                            double loss_scale) {
  validate_setting(setting, space);
  if (!std::isfinite(loss) || loss < 0.0) fail("loss must be finite and non-negative");
  if (!std::isfinite(loss_scale) || loss_scale <= 0.0) fail("loss scale must be positive");
  EncodedPoint out;
  out.coords.reserve(space.encoded_width() + 1);
  for (const auto& k : space.knobs()) {
    const KnobValue& v = setting.at(k.name);
    switch (k.kind) {
      case KnobKind::IntegerRange:
        out.coords.push_back((static_cast<double>(std::get<std::int64_t>(v)) - k.lo) /
                             (k.hi - k.lo));
        break;
      case KnobKind::RealRange:
        out.coords.push_back((std::get<double>(v) - k.lo) / (k.hi - k.lo));
        break;
      case KnobKind::Ordinal: {
        std::size_t r = level_rank(k, std::get<std::string>(v));
        out.coords.push_back(static_cast<double>(r) / static_cast<double>(k.levels.size() - 1));
        break;
      }
      case KnobKind::Nominal: {
        std::size_t r = level_rank(k, std::get<std::string>(v));
        for (std::size_t i = 0; i < k.levels.size(); ++i)
          out.coords.push_back(i == r ? 1.0 : 0.0);
        break;
      }
      case KnobKind::Boolean:
        out.coords.push_back(std::get<bool>(v) ? 1.0 : 0.0);
        break;
    }
  }
  out.coords.push_back(loss / loss_scale);
  return out;
}

SystemSetting decode_point(const std::vector<double>& coords, const KnobSpace& space) {
  std::size_t w = space.encoded_width();
  if (coords.size() != w && coords.size() != w + 1)
    fail("coordinate vector has wrong width for this knob space");
  SystemSetting s;
  std::size_t at = 0;
  for (const auto& k : space.knobs()) {
    switch (k.kind) {
      case KnobKind::IntegerRange:
        s[k.name] = round_clamp(k.lo + coords[at++] * (k.hi - k.lo), k.lo, k.hi);
        break;
      case KnobKind::RealRange: {
        double v = k.lo + coords[at++] * (k.hi - k.lo);
        s[k.name] = std::max(k.lo, std::min(k.hi, v));
        break;
      }
      case KnobKind::Ordinal: {
        double n1 = static_cast<double>(k.levels.size() - 1);
        std::int64_t r = round_clamp(coords[at++] * n1, 0.0, n1);
        s[k.name] = k.levels[static_cast<std::size_t>(r)];
        break;
      }
      case KnobKind::Nominal: {
        std::size_t best = 0;
        for (std::size_t i = 1; i < k.levels.size(); ++i)
          if (coords[at + i] > coords[at + best]) best = i;
        s[k.name] = k.levels[best];
        at += k.levels.size();
        break;
      }
      case KnobKind::Boolean:
        s[k.name] = coords[at++] >= 0.5;
        break;
    }
  }
  return s;
}

std::string knob_value_to_string(const KnobValue& v) {
  std::ostringstream os;
  if (const auto* b = std::get_if<bool>(&v)) {
    os << (*b ? "true" : "false");
  } else if (const auto* i = std::get_if<std::int64_t>(&v)) {
    os << *i;
  } else if (const auto* d = std::get_if<double>(&v)) {
    os.precision(17);
    os << *d;
  } else {
    os << std::get<std::string>(v);
  }
  return os.str();
}

std::string setting_to_string(const SystemSetting& s) {
  std::ostringstream os;
  os << "{";
  bool first = true;
  for (const auto& [name, value] : s) {
    if (!first) os << ", ";
    first = false;
    os << name << "=" << knob_value_to_string(value);
  }
  os << "}";
  return os.str();
}

std::string SettingsCatalog::id_for(const SystemSetting& setting) {
  for (const auto& [id, s] : entries_)
    if (s == setting) return id;
  entries_.emplace_back("X" + std::to_string(entries_.size()), setting);
  return entries_.back().first;
}

bool SettingsCatalog::contains(const std::string& id) const {
  for (const auto& [eid, s] : entries_)
    if (eid == id) return true;
  return false;
}

const SystemSetting& SettingsCatalog::setting(const std::string& id) const {
  for (const auto& [eid, s] : entries_)
    if (eid == id) return s;
  throw validation_error("unknown setting id: " + id);
}

}  // namespace pstune
