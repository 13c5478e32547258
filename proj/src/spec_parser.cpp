#include <fstream>
#include <sstream>

#include "lisvar/restrictions.hpp"

namespace lisvar {

namespace {

struct LineCtx {
  const std::string& name;
  int line;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(name + ":" + std::to_string(line) + ": " + msg);
  }
};

int parse_int(const std::string& tok, const LineCtx& cx, const char* what) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(tok, &pos);
  } catch (const std::exception&) {
    cx.fail(std::string("expected integer for ") + what + ", got '" + tok + "'");
  }
  if (pos != tok.size()) cx.fail(std::string("trailing characters in ") + what + " '" + tok + "'");
  return v;
}

double parse_double(const std::string& tok, const LineCtx& cx, const char* what) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    cx.fail(std::string("expected number for ") + what + ", got '" + tok + "'");
  }
  if (pos != tok.size()) cx.fail(std::string("trailing characters in ") + what + " '" + tok + "'");
  return v;
}

std::vector<std::string> tokenize(const std::string& line) {
  std::string stripped = line.substr(0, line.find('#'));
  std::istringstream is(stripped);
  std::vector<std::string> toks;
  std::string t;
  while (is >> t) toks.push_back(t);
  return toks;
}

// equal <target> <indices...> [scale <d>] = <value>
EqualityAtom parse_equal(const std::vector<std::string>& t, const LineCtx& cx) {
  if (t.size() < 2) cx.fail("missing equality target");
  EqualityAtom a;
  std::size_t idx = 2;
  const std::string& target = t[1];
  auto need = [&](std::size_t count) {
    if (t.size() < idx + count) cx.fail("too few fields for target '" + target + "'");
  };
  if (target == "a0inv" || target == "a0" || target == "cirinf") {
    a.kind = target == "a0inv"  ? TargetKind::A0Inv
             : target == "a0"   ? TargetKind::A0
                                : TargetKind::CirInf;
    need(2);
    a.i = parse_int(t[idx++], cx, "row");
    a.j = parse_int(t[idx++], cx, "column");
  } else if (target == "al") {
    a.kind = TargetKind::Al;
    need(3);
    a.lag = parse_int(t[idx++], cx, "lag");
    a.i = parse_int(t[idx++], cx, "row");
    a.j = parse_int(t[idx++], cx, "column");
  } else if (target == "ir") {
    a.kind = TargetKind::Irh;
    need(3);
    a.horizon = parse_int(t[idx++], cx, "horizon");
    a.i = parse_int(t[idx++], cx, "row");
    a.j = parse_int(t[idx++], cx, "column");
  } else if (target == "combo-a0inv" || target == "combo-a0") {
    a.kind = target == "combo-a0inv" ? TargetKind::ComboA0Inv : TargetKind::ComboA0;
    need(4);
    a.i = parse_int(t[idx++], cx, "first row");
    a.j = parse_int(t[idx++], cx, "first column");
    a.i2 = parse_int(t[idx++], cx, "second row");
    a.j2 = parse_int(t[idx++], cx, "second column");
  } else {
    cx.fail("unknown equality target '" + target + "'");
  }
  if (idx < t.size() && t[idx] == "scale") {
    if (a.kind != TargetKind::ComboA0Inv && a.kind != TargetKind::ComboA0)
      cx.fail("'scale' is only valid for combo targets");
    ++idx;
    if (idx >= t.size()) cx.fail("missing value after 'scale'");
    a.d = parse_double(t[idx++], cx, "scale");
  }
  if (idx >= t.size() || t[idx] != "=") cx.fail("expected '=' before the restriction value");
  ++idx;
  if (idx >= t.size()) cx.fail("missing restriction value after '='");
  a.value = parse_double(t[idx++], cx, "value");
  if (idx != t.size()) cx.fail("unexpected trailing token '" + t[idx] + "'");
  return a;
}

// sign ir <h|h1:h2> <variable> <shock> <+|->
SignAtom parse_sign(const std::vector<std::string>& t, const LineCtx& cx) {
  if (t.size() != 6) cx.fail("sign line must be: sign ir <h|h1:h2> <variable> <shock> <+|->");
  if (t[1] != "ir") cx.fail("unknown sign target '" + t[1] + "'");
  SignAtom s;
  auto colon = t[2].find(':');
  if (colon == std::string::npos) {
    s.h_from = s.h_to = parse_int(t[2], cx, "horizon");
  } else {
    s.h_from = parse_int(t[2].substr(0, colon), cx, "horizon start");
    s.h_to = parse_int(t[2].substr(colon + 1), cx, "horizon end");
  }
  s.variable = parse_int(t[3], cx, "variable");
  s.shock = parse_int(t[4], cx, "shock");
  if (t[5] == "+")
    s.positive = true;
  else if (t[5] == "-")
    s.positive = false;
  else
    cx.fail("sign direction must be '+' or '-', got '" + t[5] + "'");
  return s;
}

}  // namespace

RestrictionSpec parse_spec_stream(std::istream& in, const std::string& name) {
  RestrictionSpec spec;
  bool saw_vars = false, saw_lags = false, saw_norm = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    LineCtx cx{name, lineno};
    auto toks = tokenize(line);
    if (toks.empty()) continue;
    const std::string& head = toks[0];
    if (head == "vars") {
      if (saw_vars) cx.fail("duplicate 'vars' line");
      if (toks.size() != 2) cx.fail("'vars' takes exactly one integer");
      spec.n = parse_int(toks[1], cx, "vars");
      if (spec.n < 1) cx.fail("'vars' must be positive");
      saw_vars = true;
    } else if (head == "lags") {
      if (saw_lags) cx.fail("duplicate 'lags' line");
      if (toks.size() != 2) cx.fail("'lags' takes exactly one integer");
      spec.p = parse_int(toks[1], cx, "lags");
      if (spec.p < 0) cx.fail("'lags' must be nonnegative");
      saw_lags = true;
    } else if (head == "normalization") {
      if (saw_norm) cx.fail("duplicate 'normalization' line");
      if (toks.size() != 2) cx.fail("'normalization' takes exactly one identifier");
      if (toks[1] == "a0-diag-nonneg")
        spec.normalization = NormalizationRule::A0DiagNonNeg;
      else if (toks[1] == "none")
        spec.normalization = NormalizationRule::None;
      else
        cx.fail("unknown normalization rule '" + toks[1] + "'");
      saw_norm = true;
    } else if (head == "equal") {
      if (!saw_vars) cx.fail("'vars' must come before restriction lines");
      spec.equalities.push_back(parse_equal(toks, cx));
    } else if (head == "sign") {
      if (!saw_vars) cx.fail("'vars' must come before restriction lines");
      spec.signs.push_back(parse_sign(toks, cx));
    } else {
      cx.fail("unknown directive '" + head + "'");
    }
  }
  if (!saw_vars) throw ParseError(name + ": missing 'vars' line");
  try {
    spec.validate();
  } catch (const InvalidSpec& e) {
    throw ParseError(name + ": " + e.what());
  }
  return spec;
}

RestrictionSpec parse_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  return parse_spec_stream(in, path);
}

}  // namespace lisvar
