// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "compsim/edit.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

namespace compsim {

namespace {

constexpr std::array<std::string_view, 8> kOperationNames = {"translate", "rotate",    "scale", "select",
                                                            "replicate", "delete", "add",   "swap"};

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::string number_text(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double to_radians(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace

std::string_view to_string(Operation op) { return kOperationNames[static_cast<std::size_t>(op)]; }

Operation operation_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kOperationNames.size(); ++i)
    if (kOperationNames[i] == name) return static_cast<Operation>(i);
  throw std::invalid_argument("unknown operation '" + std::string(name) + "'");
}

ParseError::ParseError(std::size_t position, std::string message, std::vector<std::string> expected)
    : std::runtime_error("at offset " + std::to_string(position) + ": " + message +
                         (expected.empty() ? "" : " (expected " + join(expected, ", ") + ")")),
      position_(position),
      message_(std::move(message)),
      expected_(std::move(expected)) {}

// ---------------------------------------------------------------------------
// Name table

void NameTable::add(const std::string& name, const Embedding& embedding) { table_[lower(name)] = embedding; }

const Embedding* NameTable::find(std::string_view name) const {
  auto it = table_.find(lower(name));
  return it == table_.end() ? nullptr : &it->second;
}

NameTable NameTable::from_scene(const Scene& scene) {
  NameTable t;
  for (const SceneNode& n : scene.nodes())
    if (!n.is_background() && !n.name.empty()) t.add(n.name, n.embedding);
  return t;
}

NameTable NameTable::from_dataset(const SceneDataset& dataset) {
  NameTable t;
  for (const InstanceInfo& inst : dataset.instances) t.add(inst.name, inst.embedding);
  return t;
}

// ---------------------------------------------------------------------------
// Tokenizer

namespace {

struct Token {
  enum Kind { Word, Number, Id, Quoted, Punct, End } kind = End;
  std::string text;  // lower-cased for words
  double number = 0.0;
  int id = 0;
  std::size_t pos = 0;
  std::size_t end = 0;
};

bool word_char(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    Token t;
    t.pos = i;
    const bool signed_number = (c == '-' || c == '+') && i + 1 < s.size() &&
                               (std::isdigit(static_cast<unsigned char>(s[i + 1])) || s[i + 1] == '.');
    if (std::isdigit(c) || signed_number || (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      std::size_t start = i + (c == '+' ? 1 : 0);
      const auto res = std::from_chars(s.data() + start, s.data() + s.size(), t.number);
      if (res.ec == std::errc::result_out_of_range) throw ParseError(i, "number out of range", {});
      if (res.ec != std::errc()) throw ParseError(i, "malformed number", {"<number>"});
      t.kind = Token::Number;
      i = static_cast<std::size_t>(res.ptr - s.data());
    } else if (c == '#') {
      std::size_t j = i + 1;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      if (j == i + 1) throw ParseError(i + 1, "'#' must be followed by an instance id", {"<digits>"});
      const auto res = std::from_chars(s.data() + i + 1, s.data() + j, t.id);
      if (res.ec != std::errc()) throw ParseError(i + 1, "instance id out of range", {});
      t.kind = Token::Id;
      i = j;
    } else if (c == '"' || c == '\'') {
      std::size_t j = i + 1;
      std::string text;
      while (j < s.size() && s[j] != static_cast<char>(c)) {
        if (s[j] == '\\' && j + 1 < s.size()) ++j;
        text += s[j++];
      }
      if (j >= s.size()) throw ParseError(i, "unterminated quoted name", {std::string("closing ") + static_cast<char>(c)});
      if (text.empty()) throw ParseError(i, "empty quoted name", {"<name>"});
      t.kind = Token::Quoted;
      t.text = std::move(text);
      i = j + 1;
    } else if (c == '(' || c == ')' || c == ',') {
      t.kind = Token::Punct;
      t.text = std::string(1, static_cast<char>(c));
      ++i;
    } else if (word_char(c)) {
      std::size_t j = i;
      while (j < s.size() && (word_char(static_cast<unsigned char>(s[j])) || std::isdigit(static_cast<unsigned char>(s[j])) ||
                              (s[j] == '-' && j + 1 < s.size() && word_char(static_cast<unsigned char>(s[j + 1])))))
        ++j;
      t.kind = Token::Word;
      t.text = lower(s.substr(i, j - i));
      i = j;
    } else {
      throw ParseError(i, std::string("unexpected character '") + static_cast<char>(c) + "'", {});
    }
    t.end = i;
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = Token::End;
  end.pos = end.end = s.size();
  out.push_back(end);
  return out;
}

// ---------------------------------------------------------------------------
// Parser

struct VerbInfo {
  std::string_view word;
  Operation op;
};
constexpr VerbInfo kVerbs[] = {
    {"move", Operation::Translate},   {"translate", Operation::Translate}, {"shift", Operation::Translate},
    {"rotate", Operation::Rotate},    {"turn", Operation::Rotate},         {"spin", Operation::Rotate},
    {"scale", Operation::Scale},      {"resize", Operation::Scale},        {"enlarge", Operation::Scale},
    {"shrink", Operation::Scale},     {"select", Operation::Select},       {"highlight", Operation::Select},
    {"copy", Operation::Replicate},   {"duplicate", Operation::Replicate}, {"replicate", Operation::Replicate},
    {"clone", Operation::Replicate},  {"delete", Operation::Delete},       {"remove", Operation::Delete},
    {"erase", Operation::Delete},     {"add", Operation::Add},             {"insert", Operation::Add},
    {"import", Operation::Add},       {"swap", Operation::Swap},           {"exchange", Operation::Swap},
};

struct UnitInfo {
  std::string_view word;
  double scale;
};
constexpr UnitInfo kLengthUnits[] = {{"m", 1.0},        {"meter", 1.0},         {"meters", 1.0},
                                     {"metre", 1.0},    {"metres", 1.0},        {"cm", 100.0},
                                     {"centimeter", 100.0}, {"centimeters", 100.0}, {"mm", 1000.0},
                                     {"millimeter", 1000.0}, {"millimeters", 1000.0}};
// Angle unit words; radians are converted to degrees.
constexpr std::string_view kDegreeWords[] = {"deg", "degree", "degrees", "\xc2\xb0"};
constexpr std::string_view kRadianWords[] = {"rad", "radian", "radians"};
// Words that end a bare (unquoted) target name.
constexpr std::string_view kClauseWords[] = {"by",  "along", "on",     "around", "about", "from",
                                             "at",  "yaw",   "scaled", "with",   "and",   "in"};

template <typename Range>
bool contains_word(const Range& words, std::string_view w) {
  return std::find(std::begin(words), std::end(words), w) != std::end(words);
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text), tokens_(tokenize(text)) {}

  // Offsets of the targets in the last parse, for resolution errors.
  std::size_t target_pos = 0;
  std::size_t other_pos = 0;
  std::size_t source_pos = 0;

  EditCommand parse() {
    EditCommand cmd;
    const Token& verb = peek();
    std::optional<Operation> op;
    if (verb.kind == Token::Word)
      for (const auto& v : kVerbs)
        if (v.word == verb.text) op = v.op;
    if (!op) {
      std::vector<std::string> verbs;
      for (const auto& v : kVerbs) verbs.emplace_back(v.word);
      fail(verb, verb.kind == Token::End ? "empty command" : "unrecognized verb '" + describe(verb) + "'", verbs);
    }
    cmd.operation = *op;
    shrink_ = verb.text == "shrink";
    next();

    target_pos = peek().pos;
    parse_target(cmd.selector, cmd.instance_id, cmd.name, cmd.operation != Operation::Add);

    while (peek().kind != Token::End) parse_clause(cmd);
    finish(cmd);
    return cmd;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const { return tokens_[std::min(index_ + ahead, tokens_.size() - 1)]; }
  const Token& next() { return tokens_[std::min(index_++, tokens_.size() - 1)]; }
  bool at_word(std::string_view w) const { return peek().kind == Token::Word && peek().text == w; }
  bool accept_word(std::string_view w) {
    if (!at_word(w)) return false;
    next();
    return true;
  }
  void accept_punct(char c) {
    if (peek().kind == Token::Punct && peek().text[0] == c) next();
  }

  static std::string describe(const Token& t) {
    switch (t.kind) {
      case Token::Number: return number_text(t.number);
      case Token::Id: return "#" + std::to_string(t.id);
      case Token::Quoted: return "\"" + t.text + "\"";
      case Token::End: return "end of command";
      default: return t.text;
    }
  }

  [[noreturn]] void fail(const Token& at, const std::string& message, std::vector<std::string> expected) const {
    throw ParseError(at.pos, message, std::move(expected));
  }

  // Targets are `#<id>`, `it`, a quoted name, or bare words up to the first
  // clause keyword ("move the red ball 10 cm along x").
  void parse_target(Selector& selector, int& id, std::string& name, bool allow_it) {
    const Token& t = peek();
    std::vector<std::string> expected = {"#<id>", "\"<name>\"", "<name>"};
    if (allow_it) expected.insert(expected.begin() + 1, "it");
    if (t.kind == Token::Id) {
      selector = Selector::Id;
      id = t.id;
    } else if (t.kind == Token::Word && t.text == "it") {
      if (!allow_it) fail(t, "'it' cannot name a node here", expected);
      selector = Selector::It;
    } else if (t.kind == Token::Quoted) {
      selector = Selector::Name;
      name = t.text;
    } else if (t.kind == Token::Word && !contains_word(kClauseWords, t.text)) {
      accept_word("the");
      std::string words;
      while (peek().kind == Token::Word && !contains_word(kClauseWords, peek().text)) {
        if (!words.empty()) words += ' ';
        words += next().text;
      }
      if (words.empty()) fail(peek(), "missing target name", expected);
      selector = Selector::Name;
      name = std::move(words);
      return;
    } else {
      fail(t, t.kind == Token::End ? "missing target" : "expected a target, got '" + describe(t) + "'", expected);
    }
    next();
  }

  Axis parse_axis() {
    accept_word("the");
    const Token& t = peek();
    const std::vector<std::string> expected = {"x", "y", "z"};
    if (t.kind != Token::Word) fail(t, "expected an axis", expected);
    std::string w = t.text;
    if (w.size() == 6 && w.substr(1) == "-axis") w = w.substr(0, 1);
    if (w != "x" && w != "y" && w != "z") fail(t, "unknown axis '" + t.text + "'", expected);
    next();
    accept_word("axis");
    return w == "x" ? Axis::X : (w == "y" ? Axis::Y : Axis::Z);
  }

  double parse_number(const std::string& what) {
    const Token& t = peek();
    if (t.kind != Token::Number) fail(t, "expected " + what, {"<number>"});
    next();
    return t.number;
  }

  double parse_length() {
    const double v = parse_number("a distance");
    const Token& u = peek();
    if (u.kind == Token::Word)
      for (const auto& unit : kLengthUnits)
        if (unit.word == u.text) {
          next();
          return v / unit.scale;
        }
    fail(u, "missing distance unit", {"m", "cm", "mm"});
  }

  double parse_angle() {
    const double v = parse_number("an angle");
    const Token& u = peek();
    if (u.kind == Token::Word && contains_word(kDegreeWords, u.text)) {
      next();
      return v;
    }
    if (u.kind == Token::Word && contains_word(kRadianWords, u.text)) {
      next();
      return v * 180.0 / std::numbers::pi;
    }
    fail(u, "missing angle unit", {"deg", "rad"});
  }

  double parse_factor() {
    if (accept_word("a")) {
      if (!accept_word("factor")) fail(peek(), "expected 'factor'", {"factor"});
      if (!accept_word("of")) fail(peek(), "expected 'of'", {"of"});
    } else if (accept_word("factor")) {
      accept_word("of");
    }
    const Token& num = peek();
    const double v = parse_number("a scale factor");
    if (!accept_word("x")) accept_word("times");
    if (!(v > 0.0)) fail(num, "scale factor must be positive", {"<number>x"});
    return v;
  }

  std::string parse_scene_name() {
    const Token& t = peek();
    if (t.kind != Token::Quoted && t.kind != Token::Word) fail(t, "expected a scene name", {"\"<scene>\""});
    next();
    return t.text;
  }

  void once(bool& seen, const Token& at, const std::string& what) {
    if (seen) fail(at, what + " given twice", {});
    seen = true;
  }

  // Words that may start a clause for this operation, for error messages.
  static std::vector<std::string> clause_starters(Operation op) {
    switch (op) {
      case Operation::Translate: return {"<number> <unit>", "by", "along", "end of command"};
      case Operation::Rotate: return {"<number> deg", "by", "around", "end of command"};
      case Operation::Scale: return {"<number>x", "by", "along", "end of command"};
      case Operation::Replicate: return {"<number> <unit>", "along", "end of command"};
      case Operation::Add: return {"from", "at", "yaw", "scaled", "end of command"};
      case Operation::Swap: return {"with", "#<id>", "in", "end of command"};
      default: return {"end of command"};
    }
  }

  void parse_clause(EditCommand& cmd) {
    EditConfig& c = cmd.config;
    const Token& t = peek();
    const Operation op = cmd.operation;
    const bool linear = op == Operation::Translate || op == Operation::Replicate;

    if ((linear || op == Operation::Rotate || op == Operation::Scale) &&
        (t.kind == Token::Number || (at_word("by") && op != Operation::Replicate))) {
      accept_word("by");
      once(magnitude_seen_, t, "magnitude");
      if (op == Operation::Rotate) {
        c.angle = parse_angle();
      } else if (op == Operation::Scale) {
        const double f = parse_factor();
        c.factor = shrink_ ? 1.0 / f : f;
      } else {
        c.distance = parse_length();
      }
      return;
    }
    if ((linear && (at_word("along") || at_word("on"))) || (op == Operation::Scale && at_word("along")) ||
        (op == Operation::Rotate && (at_word("around") || at_word("about")))) {
      next();
      once(axis_seen_, t, "axis");
      c.axis = parse_axis();
      return;
    }
    if (op == Operation::Add) {
      if (accept_word("from")) {
        once(source_seen_, t, "source scene");
        source_pos = peek().pos;
        c.source_scene = parse_scene_name();
        return;
      }
      if (accept_word("at")) {
        once(position_seen_, t, "position");
        accept_punct('(');
        Vec3 p;
        for (int i = 0; i < 3; ++i) {
          if (i) accept_punct(',');
          p[i] = parse_number("a coordinate");
        }
        accept_punct(')');
        double unit = 1.0;
        if (peek().kind == Token::Word)
          for (const auto& u : kLengthUnits)
            if (u.word == peek().text) {
              unit = u.scale;
              next();
              break;
            }
        c.position = p / unit;
        return;
      }
      if (accept_word("yaw")) {
        once(yaw_seen_, t, "yaw");
        c.yaw = parse_angle();
        return;
      }
      if (accept_word("scaled")) {
        once(magnitude_seen_, t, "scale");
        accept_word("by");
        c.factor = parse_factor();
        return;
      }
    }
    if (op == Operation::Swap) {
      const bool bare_partner = !other_seen_ && (t.kind == Token::Id || t.kind == Token::Quoted);
      if (bare_partner || accept_word("with") || accept_word("and")) {
        once(other_seen_, t, "swap partner");
        other_pos = peek().pos;
        parse_target(c.other_selector, c.other_id, c.other_name, c.source_scene.empty() && !in_seen_);
        return;
      }
      if (accept_word("in")) {
        once(in_seen_, t, "scene");
        source_pos = peek().pos;
        c.source_scene = parse_scene_name();
        if (c.other_selector == Selector::It) fail(t, "'it' cannot name a node in another scene", {});
        return;
      }
    }
    fail(t, "unexpected '" + describe(t) + "'", clause_starters(op));
  }

  void finish(const EditCommand& cmd) {
    const Token& end = peek();
    const EditConfig& c = cmd.config;
    switch (cmd.operation) {
      case Operation::Translate:
        if (!c.distance) fail(end, "missing distance", {"<number> <unit>"});
        if (!c.axis) fail(end, "missing axis", {"along <axis>"});
        break;
      case Operation::Rotate:
        if (!c.angle) fail(end, "missing angle", {"<number> deg"});
        if (!c.axis) fail(end, "missing axis", {"around <axis>"});
        break;
      case Operation::Scale:
        if (!c.factor) fail(end, "missing scale factor", {"<number>x"});
        break;
      case Operation::Replicate:
        if (c.distance.has_value() != c.axis.has_value())
          fail(end, c.distance ? "offset needs an axis" : "offset needs a distance",
               {c.distance ? "along <axis>" : "<number> <unit>"});
        break;
      case Operation::Add:
        if (c.source_scene.empty()) fail(end, "missing source scene", {"from \"<scene>\""});
        break;
      case Operation::Swap:
        if (!other_seen_) fail(end, "missing swap partner", {"with <target>"});
        break;
      default: break;
    }
  }

  std::string_view text_;
  std::vector<Token> tokens_;
  std::size_t index_ = 0;
  bool shrink_ = false;
  bool magnitude_seen_ = false, axis_seen_ = false, source_seen_ = false, position_seen_ = false;
  bool yaw_seen_ = false, other_seen_ = false, in_seen_ = false;
};

// Resolves a selector against a scene; returns an error message on failure.
std::optional<int> resolve(const Scene& scene, Selector selector, int id, const std::string& name,
                           const NameTable* names, std::string& error) {
  switch (selector) {
    case Selector::Id: return id;
    case Selector::It:
      if (auto sel = scene.selection()) return *sel;
      error = "nothing is selected";
      return std::nullopt;
    case Selector::Name: {
      NameTable own;
      if (!names) {
        own = NameTable::from_scene(scene);
        names = &own;
      }
      const Embedding* e = names->find(name);
      if (!e) {
        error = "no object named \"" + name + "\"";
        return std::nullopt;
      }
      try {
        return semantic_query(scene, *e);
      } catch (const NotFoundError&) {
        error = "scene has no objects to match \"" + name + "\"";
        return std::nullopt;
      }
    }
  }
  return std::nullopt;
}

std::string axis_name(Axis a) { return a == Axis::X ? "x" : (a == Axis::Y ? "y" : "z"); }

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string target_text(Selector selector, int id, const std::string& name) {
  switch (selector) {
    case Selector::Id: return "#" + std::to_string(id);
    case Selector::It: return "it";
    case Selector::Name: return quote(name);
  }
  return {};
}

CommandOutcome rejected(std::string reason) {
  CommandOutcome o;
  o.status = OutcomeStatus::Rejected;
  o.reason = std::move(reason);
  return o;
}

CommandOutcome applied(std::vector<int> ids, std::optional<EditCommand> inverse) {
  CommandOutcome o;
  o.status = OutcomeStatus::Applied;
  o.affected_ids = std::move(ids);
  o.inverse = std::move(inverse);
  return o;
}

EditCommand by_id(Operation op, int id) {
  EditCommand c;
  c.operation = op;
  c.instance_id = id;
  return c;
}

}  // namespace

EditCommand parse_command(std::string_view text) { return Parser(text).parse(); }

EditCommand parse_command(std::string_view text, const Scene& scene, const NameTable* names) {
  Parser parser(text);
  EditCommand cmd = parser.parse();
  std::string error;
  // Add names its node in the source scene, which this scene cannot resolve.
  if (cmd.operation != Operation::Add) {
    const auto id = resolve(scene, cmd.selector, cmd.instance_id, cmd.name, names, error);
    if (!id) throw ParseError(parser.target_pos, "unresolvable target: " + error, {});
    cmd.selector = Selector::Id;
    cmd.instance_id = *id;
    cmd.name.clear();
  }
  if (cmd.operation == Operation::Swap && cmd.config.source_scene.empty()) {
    auto& c = cmd.config;
    const auto id = resolve(scene, c.other_selector, c.other_id, c.other_name, names, error);
    if (!id) throw ParseError(parser.other_pos, "unresolvable target: " + error, {});
    c.other_selector = Selector::Id;
    c.other_id = *id;
    c.other_name.clear();
  }
  return cmd;
}

void validate(const EditCommand& cmd) {
  const EditConfig& c = cmd.config;
  auto need = [&](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string(to_string(cmd.operation)) + ": " + what);
  };
  auto finite = [](const std::optional<double>& v) { return !v || std::isfinite(*v); };
  need(finite(c.distance) && finite(c.angle) && finite(c.factor) && finite(c.yaw), "values must be finite");
  need(!c.position || is_finite(*c.position), "position must be finite");
  need(!c.factor || *c.factor > 0.0, "scale factor must be positive");
  switch (cmd.operation) {
    case Operation::Translate: need(c.distance && c.axis, "needs a distance and an axis"); break;
    case Operation::Rotate: need(c.angle && c.axis, "needs an angle and an axis"); break;
    case Operation::Scale: need(c.factor.has_value(), "needs a scale factor"); break;
    case Operation::Replicate: need(c.distance.has_value() == c.axis.has_value(), "offset needs distance and axis"); break;
    case Operation::Add: need(cmd.restore || !c.source_scene.empty(), "needs a source scene"); break;
    default: break;
  }
}

std::string format_command(const EditCommand& cmd) {
  if (cmd.restore) throw std::invalid_argument("format_command: undo payloads have no text form");
  const EditConfig& c = cmd.config;
  std::string out = cmd.operation == Operation::Translate   ? "move"
                    : cmd.operation == Operation::Replicate ? "copy"
                                                            : std::string(to_string(cmd.operation));
  out += " " + target_text(cmd.selector, cmd.instance_id, cmd.name);
  switch (cmd.operation) {
    case Operation::Translate:
    case Operation::Replicate:
      if (c.distance) out += " " + number_text(*c.distance) + " m";
      if (c.axis) out += " along " + axis_name(*c.axis);
      break;
    case Operation::Rotate:
      if (c.angle) out += " " + number_text(*c.angle) + " deg";
      if (c.axis) out += " around " + axis_name(*c.axis);
      break;
    case Operation::Scale:
      if (c.factor) out += " " + number_text(*c.factor) + "x";
      if (c.axis) out += " along " + axis_name(*c.axis);
      break;
    case Operation::Add:
      out += " from " + quote(c.source_scene);
      if (c.position)
        out += " at " + number_text(c.position->x) + " " + number_text(c.position->y) + " " +
               number_text(c.position->z) + " m";
      if (c.yaw) out += " yaw " + number_text(*c.yaw) + " deg";
      if (c.factor) out += " scaled " + number_text(*c.factor) + "x";
      break;
    case Operation::Swap:
      out += " with " + target_text(c.other_selector, c.other_id, c.other_name);
      if (!c.source_scene.empty()) out += " in " + quote(c.source_scene);
      break;
    default: break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Application

CommandOutcome cross_scene_add(Scene& target, const Scene& source, int source_id, const PoseSE3& placement,
                               double scale) {
  if (!std::isfinite(scale) || scale <= 0.0) return rejected("scale must be positive and finite");
  if (!is_rotation(placement.rotation, 1e-9) || !is_finite(placement.translation))
    return rejected("placement is not a rigid pose");
  const SceneNode* src = source.find(source_id);
  if (!src) return rejected("no node with id " + std::to_string(source_id) + " in scene '" + source.name() + "'");
  if (src->is_background()) return rejected("the background cannot be copied into another scene");
  SceneNode copy = *src;  // copy before inserting, in case source is target
  copy.selected = false;
  copy.bbox.pose = placement * copy.bbox.pose;
  copy.bbox.half_extents = copy.bbox.half_extents * scale;
  const int id = target.add_node(std::move(copy));
  return applied({id}, by_id(Operation::Delete, id));
}

CommandOutcome swap_nodes(Scene& scene_a, int id_a, Scene& scene_b, int id_b) {
  SceneNode* a = scene_a.find(id_a);
  SceneNode* b = scene_b.find(id_b);
  if (!a) return rejected("no node with id " + std::to_string(id_a));
  if (!b) return rejected("no node with id " + std::to_string(id_b) + " in scene '" + scene_b.name() + "'");
  if (a->is_background() || b->is_background()) return rejected("the background cannot be swapped");
  EditCommand inverse = by_id(Operation::Swap, id_a);
  inverse.config.other_id = id_b;
  if (&scene_a != &scene_b) inverse.config.source_scene = scene_b.name();
  if (a != b) {
    std::swap(*a, *b);
    std::swap(a->id, b->id);
    std::swap(a->bbox, b->bbox);
    std::swap(a->selected, b->selected);
  }
  std::vector<int> ids = {id_a};
  if (id_b != id_a || &scene_a != &scene_b) ids.push_back(id_b);
  return applied(std::move(ids), std::move(inverse));
}

CommandOutcome apply_command(Scene& scene, const EditCommand& cmd, const EditContext& ctx) {
  try {
    validate(cmd);
  } catch (const std::invalid_argument& e) {
    return rejected(e.what());
  }
  const EditConfig& c = cmd.config;

  if (cmd.operation == Operation::Add) {
    if (cmd.restore) {
      if (cmd.restore->is_background()) return rejected("the background cannot be restored");
      if (scene.find(cmd.restore->id)) return rejected("node id " + std::to_string(cmd.restore->id) + " is in use");
      scene.restore_node(*cmd.restore);
      return applied({cmd.restore->id}, by_id(Operation::Delete, cmd.restore->id));
    }
    Scene* source = ctx.find_scene ? ctx.find_scene(c.source_scene) : nullptr;
    if (!source) return rejected("unknown scene '" + c.source_scene + "'");
    std::string error;
    const auto src_id = resolve(*source, cmd.selector, cmd.instance_id, cmd.name, nullptr, error);
    if (!src_id) return rejected(error);
    const SceneNode* src = source->find(*src_id);
    if (!src) return rejected("no node with id " + std::to_string(*src_id) + " in scene '" + c.source_scene + "'");
    PoseSE3 placement;
    if (c.yaw) placement.rotation = rotation_about(Axis::Z, to_radians(*c.yaw));
    const Vec3 center = c.position.value_or(src->bbox.pose.translation);
    placement.translation = center - placement.rotation * src->bbox.pose.translation;
    return cross_scene_add(scene, *source, *src_id, placement, c.factor.value_or(1.0));
  }

  std::string error;
  const auto id = resolve(scene, cmd.selector, cmd.instance_id, cmd.name, ctx.names, error);
  if (!id) return rejected(error);
  SceneNode* node = scene.find(*id);
  if (!node) return rejected("no node with id " + std::to_string(*id));
  if (node->is_background())
    return rejected("background immutable: " + std::string(to_string(cmd.operation)) + " cannot target node 0");

  EditCommand inverse = by_id(cmd.operation, *id);
  switch (cmd.operation) {
    case Operation::Translate:
      node->bbox.pose.translation += unit_axis(*c.axis) * *c.distance;
      inverse.config.axis = c.axis;
      inverse.config.distance = -*c.distance;
      return applied({*id}, inverse);
    case Operation::Rotate:
      node->bbox.pose.rotation = node->bbox.pose.rotation * rotation_about(*c.axis, to_radians(*c.angle));
      inverse.config.axis = c.axis;
      inverse.config.angle = -*c.angle;
      return applied({*id}, inverse);
    case Operation::Scale:
      if (c.axis)
        node->bbox.half_extents[static_cast<int>(*c.axis)] *= *c.factor;
      else
        node->bbox.half_extents *= *c.factor;
      inverse.config.axis = c.axis;
      inverse.config.factor = 1.0 / *c.factor;
      return applied({*id}, inverse);
    case Operation::Select:
      node->selected = !node->selected;
      return applied({*id}, inverse);
    case Operation::Replicate: {
      SceneNode copy = *node;
      copy.selected = false;
      if (c.distance) copy.bbox.pose.translation += unit_axis(*c.axis) * *c.distance;
      const int new_id = scene.add_node(std::move(copy));
      return applied({new_id}, by_id(Operation::Delete, new_id));
    }
    case Operation::Delete: {
      EditCommand undo = by_id(Operation::Add, *id);
      undo.restore = std::make_shared<const SceneNode>(*node);
      scene.remove_node(*id);
      return applied({*id}, undo);
    }
    case Operation::Swap: {
      Scene* other = &scene;
      if (!c.source_scene.empty()) {
        other = ctx.find_scene ? ctx.find_scene(c.source_scene) : nullptr;
        if (!other) return rejected("unknown scene '" + c.source_scene + "'");
      }
      const auto other_id =
          resolve(*other, c.other_selector, c.other_id, c.other_name, other == &scene ? ctx.names : nullptr, error);
      if (!other_id) return rejected(error);
      CommandOutcome out = swap_nodes(scene, *id, *other, *other_id);
      // Undo must find the other scene under the name this command used.
      if (out.inverse) out.inverse->config.source_scene = c.source_scene;
      return out;
    }
    case Operation::Add: break;
  }
  return rejected("unsupported operation");
}

// ---------------------------------------------------------------------------
// Key bindings

namespace {
constexpr KeyBinding kKeymap[] = {
    {"t", KeyAction::Translate, "translate"}, {"r", KeyAction::Rotate, "rotate"},
    {"x", KeyAction::Scale, "scale"},         {" ", KeyAction::Select, "select"},
    {"+", KeyAction::Replicate, "replicate"}, {"-", KeyAction::Delete, "delete"},
    {"c", KeyAction::CrossScene, "cross-scene"}, {"a", KeyAction::Add, "add"},
    {"s", KeyAction::Swap, "swap"},
};
}  // namespace

std::span<const KeyBinding> keymap() { return kKeymap; }

std::optional<KeyAction> action_for_key(std::string_view key) {
  for (const KeyBinding& b : kKeymap)
    if (b.key == key) return b.action;
  return std::nullopt;
}

}  // namespace compsim
