#pragma once

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "vbpg/core/error.hpp"
#include "vbpg/core/types.hpp"
#include "vbpg/ingest/schema.hpp"
#include "vbpg/io/csv.hpp"

namespace vbpg::ingest {

struct Rejection {
  std::size_t row = 0;
  ErrorKind kind = ErrorKind::BadField;
  std::string reason;
};

/// Point-level facts charted on a header row that opens each rally.
struct PointHeader {
  MatchId match_id;
  int set_number = 1;
  int point_index = 0;
  TeamId serving_team;
  TeamId receiving_team;
  TeamId winner;
  std::size_t source_row = 0;

  friend bool operator==(const PointHeader& a, const PointHeader& b) {
    return a.match_id == b.match_id && a.set_number == b.set_number &&
           a.point_index == b.point_index && a.serving_team == b.serving_team &&
           a.receiving_team == b.receiving_team && a.winner == b.winner;
  }
};

struct ContactParse {
  std::vector<PointHeader> headers;
  std::vector<ContactRecord> records;
  std::vector<Rejection> rejections;
  std::size_t rows = 0;
};

struct LineupParse {
  std::vector<LineupState> lineups;
  std::vector<Rejection> rejections;
  std::size_t rows = 0;
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
  return std::string(s.substr(b, e - b));
}

inline std::optional<int> parse_int(std::string_view s) {
  std::string t = trim(s);
  int v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty()) return std::nullopt;
  return v;
}

inline std::optional<double> parse_double(std::string_view s) {
  std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    double v = std::stod(t, &used);
    if (used != t.size()) return std::nullopt;
    return v;
  } catch (...) {
    return std::nullopt;
  }
}

/// "(2.99, -0.13)" or "2.99 -0.13".
inline std::optional<std::pair<double, double>> parse_xy(std::string_view s) {
  std::string t = trim(s);
  if (!t.empty() && t.front() == '(') t.erase(0, 1);
  if (!t.empty() && t.back() == ')') t.pop_back();
  auto sep = t.find(',');
  if (sep == std::string::npos) sep = t.find(' ');
  if (sep == std::string::npos) return std::nullopt;
  auto x = parse_double(t.substr(0, sep));
  auto y = parse_double(t.substr(sep + 1));
  if (!x || !y) return std::nullopt;
  return std::make_pair(*x, *y);
}

using ColumnIndex = std::map<std::string, std::size_t>;

inline ColumnIndex index_header(const io::CsvRow& header) {
  ColumnIndex idx;
  for (std::size_t i = 0; i < header.size(); ++i) idx[trim(header[i])] = i;
  return idx;
}

struct FieldLookup {
  std::map<std::string, std::optional<std::size_t>> pos;

  std::string get(const io::CsvRow& row, const std::string& field) const {
    auto it = pos.find(field);
    if (it == pos.end() || !it->second || *it->second >= row.size()) return {};
    return trim(row[*it->second]);
  }
  bool has(const std::string& field) const {
    auto it = pos.find(field);
    return it != pos.end() && it->second.has_value();
  }
};

}  // namespace detail

/// Parses a contact log held in memory. Rows that fail validation are
/// collected as rejections unless `strict`, in which case the first failure
/// throws. A missing required column always throws.
inline ContactParse parse_contact_text(std::string text, const Schema& schema, bool strict = false) {
  using detail::FieldLookup;
  ContactParse out;
  io::CsvReader reader(std::move(text), schema.delimiter);
  io::CsvRow row;
  std::size_t line = 0;
  if (!reader.next(row, line)) return out;
  auto header = detail::index_header(row);

  FieldLookup look;
  for (const auto& f : Schema::contact_fields()) {
    auto it = header.find(schema.contact_column(f));
    look.pos[f] = it == header.end() ? std::nullopt : std::optional<std::size_t>(it->second);
  }
  for (const auto& f : Schema::required_contact_fields())
    if (!look.has(f))
      fail(ErrorKind::MissingColumn, "required field '" + f + "' (column '" + schema.contact_column(f) + "') not in header");

  auto reject = [&](std::size_t r, ErrorKind k, std::string why) {
    if (strict) fail(k, "row " + std::to_string(r) + ": " + why);
    out.rejections.push_back({r, k, std::move(why)});
  };

  std::optional<std::tuple<MatchId, int, int>> open_point;
  bool open_point_valid = false;
  while (reader.next(row, line)) {
    ++out.rows;
    const std::string type = look.get(row, "row_type");
    const std::string match = look.get(row, "match_id");
    auto set = detail::parse_int(look.get(row, "set"));
    auto point = detail::parse_int(look.get(row, "point"));
    if (match.empty() || !set || !point) {
      reject(line, ErrorKind::BadField, "match/set/point must be present and integral");
      if (type == schema.point_row_value) open_point.reset();
      continue;
    }
    if (type == schema.point_row_value) {
      PointHeader h;
      h.match_id = match;
      h.set_number = *set;
      h.point_index = *point;
      h.serving_team = look.get(row, "serving_team");
      h.receiving_team = look.get(row, "receiving_team");
      h.winner = look.get(row, "winner");
      h.source_row = line;
      open_point = std::make_tuple(h.match_id, h.set_number, h.point_index);
      open_point_valid = false;
      if (h.serving_team.empty() || h.receiving_team.empty() || h.serving_team == h.receiving_team) {
        reject(line, ErrorKind::BadField, "point header needs two distinct teams");
        continue;
      }
      if (h.winner != h.serving_team && h.winner != h.receiving_team) {
        reject(line, ErrorKind::BadField, "winner '" + h.winner + "' is neither team");
        continue;
      }
      open_point_valid = true;
      out.headers.push_back(std::move(h));
      continue;
    }
    if (type != schema.contact_row_value) {
      reject(line, ErrorKind::BadField, "unknown row type '" + type + "'");
      continue;
    }
    if (!open_point || *open_point != std::make_tuple(match, *set, *point)) {
      reject(line, ErrorKind::OrphanContact, "contact has no enclosing point header");
      continue;
    }
    if (!open_point_valid) {
      reject(line, ErrorKind::OrphanContact, "enclosing point header was rejected");
      continue;
    }
    ContactRecord c;
    c.match_id = match;
    c.set_number = *set;
    c.point_index = *point;
    c.source_row = line;
    c.player = look.get(row, "player");
    c.team = look.get(row, "team");
    c.conference = look.get(row, "conference");
    if (c.player.empty() || c.team.empty()) {
      reject(line, ErrorKind::BadField, "player and team are required");
      continue;
    }
    auto skill = parse_skill(look.get(row, "skill"));
    if (!skill) {
      reject(line, ErrorKind::BadSkill, "unknown skill '" + look.get(row, "skill") + "'");
      continue;
    }
    c.skill = *skill;
    const std::string eval_text = look.get(row, "eval");
    auto eval = parse_eval(eval_text);
    if (!eval) {
      reject(line, ErrorKind::BadEvalCode, "evaluation symbol '" + eval_text + "' not in # + ! - / =");
      continue;
    }
    if (!eval_valid_for(c.skill, *eval)) {
      reject(line, ErrorKind::BadEvalCode, "'!' is only defined for receptions and digs");
      continue;
    }
    c.eval = *eval;
    if (look.has("possession")) {
      const std::string ptext = look.get(row, "possession");
      if (!ptext.empty()) {
        auto pos = detail::parse_int(ptext);
        if (!pos) {
          reject(line, ErrorKind::BadField, "possession '" + ptext + "' not integral");
          continue;
        }
        c.possession_index = *pos;
      }
    }
    const std::string code = look.get(row, "attack_code");
    if (c.skill == SkillType::Attack) {
      if (code.empty()) {
        reject(line, ErrorKind::BadField, "attack without attack code");
        continue;
      }
      c.attack_code = code;
    } else if (!code.empty()) {
      reject(line, ErrorKind::BadField, "attack code on a non-attack contact");
      continue;
    }
    const std::string xy = look.get(row, "start_xy");
    if (!xy.empty()) {
      auto p = detail::parse_xy(xy);
      if (!p) {
        reject(line, ErrorKind::BadField, "unreadable coordinate '" + xy + "'");
        continue;
      }
      c.start_xy = p;
    }
    const std::string zone = look.get(row, "end_zone");
    if (!zone.empty()) {
      auto z = detail::parse_int(zone);
      if (!z || *z < 1 || *z > 9) {
        reject(line, ErrorKind::BadZone, "end zone '" + zone + "' outside 1..9");
        continue;
      }
      c.end_zone = CourtZone(*z);
    }
    out.records.push_back(std::move(c));
  }
  return out;
}

inline ContactParse parse_contact_file(const std::string& path, const Schema& schema, bool strict = false) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::MissingInput, "cannot open contact file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_contact_text(ss.str(), schema, strict);
}

/// Lineup rows: one per team per point. Rows for the same point are merged.
inline LineupParse parse_lineup_text(std::string text, const Schema& schema, bool strict = false) {
  LineupParse out;
  io::CsvReader reader(std::move(text), schema.delimiter);
  io::CsvRow row;
  std::size_t line = 0;
  if (!reader.next(row, line)) return out;
  auto header = detail::index_header(row);
  detail::FieldLookup look;
  for (const auto& f : Schema::lineup_fields()) {
    auto it = header.find(schema.lineup_column(f));
    if (it == header.end())
      fail(ErrorKind::MissingColumn, "lineup field '" + f + "' (column '" + schema.lineup_column(f) + "') not in header");
    look.pos[f] = it->second;
  }
  auto reject = [&](std::size_t r, ErrorKind k, std::string why) {
    if (strict) fail(k, "lineup row " + std::to_string(r) + ": " + why);
    out.rejections.push_back({r, k, std::move(why)});
  };
  std::map<std::tuple<MatchId, int, int>, std::size_t> by_point;
  while (reader.next(row, line)) {
    ++out.rows;
    auto set = detail::parse_int(look.get(row, "set"));
    auto point = detail::parse_int(look.get(row, "point"));
    auto setter = detail::parse_int(look.get(row, "setter_slot"));
    const std::string match = look.get(row, "match_id");
    if (match.empty() || !set || !point) {
      reject(line, ErrorKind::BadField, "match/set/point must be present and integral");
      continue;
    }
    if (!setter || *setter < 1 || *setter > 6) {
      reject(line, ErrorKind::IncompleteLineup, "setter slot missing or outside 1..6");
      continue;
    }
    TeamLineup tl;
    tl.team = look.get(row, "team");
    tl.setter_slot = *setter;
    bool complete = !tl.team.empty();
    for (int s = 1; s <= 6; ++s) {
      tl.slots[static_cast<std::size_t>(s - 1)] = look.get(row, "slot" + std::to_string(s));
      if (tl.slots[static_cast<std::size_t>(s - 1)].empty()) complete = false;
    }
    if (!complete) {
      reject(line, ErrorKind::IncompleteLineup, "lineup row has an unfilled slot");
      continue;
    }
    auto key = std::make_tuple(match, *set, *point);
    auto it = by_point.find(key);
    if (it == by_point.end()) {
      LineupState ls;
      ls.match_id = match;
      ls.set_number = *set;
      ls.point_index = *point;
      ls.source_row = line;
      by_point.emplace(key, out.lineups.size());
      out.lineups.push_back(std::move(ls));
      it = by_point.find(key);
    }
    auto& ls = out.lineups[it->second];
    if (ls.find(tl.team)) {
      reject(line, ErrorKind::BadField, "duplicate lineup for team " + tl.team);
      continue;
    }
    ls.teams.push_back(std::move(tl));
  }
  return out;
}

inline LineupParse parse_lineup_file(const std::string& path, const Schema& schema, bool strict = false) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::MissingInput, "cannot open lineup file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_lineup_text(ss.str(), schema, strict);
}

// ---------------------------------------------------------------------------
// Writers (the inverse of the parsers; used by the simulator and round trips)
// ---------------------------------------------------------------------------

inline std::string format_xy(const std::pair<double, double>& xy) {
  return "(" + io::exact(xy.first) + ", " + io::exact(xy.second) + ")";
}

/// Writes headers and contacts grouped per point, in header order.
inline void write_contacts(std::ostream& out, const std::vector<PointHeader>& headers,
                           const std::vector<ContactRecord>& records, const Schema& schema) {
  io::CsvWriter w(out, schema.delimiter);
  std::vector<std::string> cols;
  for (const auto& f : Schema::contact_fields()) cols.push_back(schema.contact_column(f));
  w.row(cols);
  std::map<std::tuple<MatchId, int, int>, std::vector<const ContactRecord*>> grouped;
  for (const auto& c : records) grouped[{c.match_id, c.set_number, c.point_index}].push_back(&c);
  for (const auto& h : headers) {
    w.row({schema.point_row_value, h.match_id, std::to_string(h.set_number), std::to_string(h.point_index),
           "", "", "", "", "", "", "", "", "", h.serving_team, h.receiving_team, h.winner});
    auto it = grouped.find({h.match_id, h.set_number, h.point_index});
    if (it == grouped.end()) continue;
    for (const ContactRecord* c : it->second) {
      w.row({schema.contact_row_value, c->match_id, std::to_string(c->set_number),
             std::to_string(c->point_index), std::to_string(c->possession_index), c->player, c->team,
             c->conference, std::string(skill_name(c->skill)), std::string(1, eval_symbol(c->eval)),
             c->attack_code.value_or(""), c->start_xy ? format_xy(*c->start_xy) : "",
             c->end_zone ? std::to_string(c->end_zone->value()) : "", "", "", ""});
    }
  }
}

inline void write_lineups(std::ostream& out, const std::vector<LineupState>& lineups, const Schema& schema) {
  io::CsvWriter w(out, schema.delimiter);
  std::vector<std::string> cols;
  for (const auto& f : Schema::lineup_fields()) cols.push_back(schema.lineup_column(f));
  w.row(cols);
  for (const auto& ls : lineups)
    for (const auto& t : ls.teams) {
      std::vector<std::string> r{ls.match_id, std::to_string(ls.set_number), std::to_string(ls.point_index), t.team};
      for (const auto& p : t.slots) r.push_back(p);
      r.push_back(std::to_string(t.setter_slot));
      w.row(r);
    }
}

}  // namespace vbpg::ingest
