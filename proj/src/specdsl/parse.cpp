// Copyright 2026 The CatHarm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>

#include "catharm/common/error.hpp"
#include "catharm/common/util.hpp"
#include "catharm/specdsl/plan.hpp"

namespace catharm::specdsl {

namespace {

using pairing::CovariateSpec;

// ---------------------------------------------------------------- lexer

enum class Tok { kIdent, kNumber, kString, kPunct, kEnd };

struct Token {
  Tok kind = Tok::kEnd;
  std::string text;
  double number = 0.0;
  bool integer = false;
  std::size_t line = 1, col = 1;
};

class Lexer {
 public:
  Lexer(std::string_view src, std::vector<ParseError>& errors) : s_(src), errors_(errors) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      Token t;
      t.line = line_;
      t.col = col_;
      if (i_ >= s_.size()) {
        t.kind = Tok::kEnd;
        out.push_back(t);
        return out;
      }
      const char c = s_[i_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        t.kind = Tok::kIdent;
        while (i_ < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) {
          t.text += advance();
        }
        out.push_back(t);
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' ||
                 ((c == '-' || c == '+') && i_ + 1 < s_.size() &&
                  (std::isdigit(static_cast<unsigned char>(s_[i_ + 1])) || s_[i_ + 1] == '.'))) {
        if (number(t)) out.push_back(t);
      } else if (c == '"') {
        if (string(t)) out.push_back(t);
      } else if (c == '{' || c == '}' || c == '=' || c == ';' || c == '(' || c == ')' || c == ',') {
        t.kind = Tok::kPunct;
        t.text = advance();
        out.push_back(t);
      } else {
        std::string bad(1, advance());
        errors_.push_back({t.line, t.col, "unexpected character", printable(bad)});
      }
    }
  }

 private:
  static std::string printable(const std::string& s) {
    std::string out;
    for (unsigned char c : s) {
      if (c >= 0x20 && c < 0x7f) {
        out += static_cast<char>(c);
      } else {
        static const char* hex = "0123456789abcdef";
        out += "\\x";
        out += hex[c >> 4];
        out += hex[c & 15];
      }
    }
    return out;
  }

  char advance() {
    const char c = s_[i_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_space() {
    while (i_ < s_.size()) {
      const char c = s_[i_];
      if (c == '#') {
        while (i_ < s_.size() && s_[i_] != '\n') advance();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else {
        return;
      }
    }
  }

  bool number(Token& t) {
    t.kind = Tok::kNumber;
    t.integer = true;
    auto digits = [&] {
      std::size_t n = 0;
      while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) {
        t.text += advance();
        ++n;
      }
      return n;
    };
    if (s_[i_] == '-' || s_[i_] == '+') t.text += advance();
    std::size_t n = digits();
    if (i_ < s_.size() && s_[i_] == '.') {
      t.integer = false;
      t.text += advance();
      n += digits();
    }
    bool ok = n > 0;
    if (ok && i_ < s_.size() && (s_[i_] == 'e' || s_[i_] == 'E')) {
      t.integer = false;
      t.text += advance();
      if (i_ < s_.size() && (s_[i_] == '-' || s_[i_] == '+')) t.text += advance();
      ok = digits() > 0;
    }
    // A number running straight into a letter ("3x") is malformed.
    while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_' || s_[i_] == '.')) {
      t.text += advance();
      ok = false;
    }
    if (ok) {
      t.number = std::strtod(t.text.c_str(), nullptr);
      ok = std::isfinite(t.number);
    }
    if (!ok) errors_.push_back({t.line, t.col, "malformed number", t.text});
    return ok;
  }

  bool string(Token& t) {
    t.kind = Tok::kString;
    advance();
    while (i_ < s_.size()) {
      const char c = s_[i_];
      if (c == '"') {
        advance();
        return true;
      }
      if (c == '\n') break;
      if (c == '\\') {
        advance();
        if (i_ >= s_.size()) break;
        const char e = advance();
        if (e == 'n') {
          t.text += '\n';
        } else if (e == 't') {
          t.text += '\t';
        } else if (e == '"' || e == '\\') {
          t.text += e;
        } else {
          errors_.push_back({line_, col_ - 2, "unknown escape", std::string("\\") + e});
        }
        continue;
      }
      t.text += advance();
    }
    errors_.push_back({t.line, t.col, "unterminated string", printable(t.text.substr(0, 20))});
    return false;
  }

  std::string_view s_;
  std::vector<ParseError>& errors_;
  std::size_t i_ = 0, line_ = 1, col_ = 1;
};

// ---------------------------------------------------------------- syntax

struct Value {
  enum Kind { kNumber, kString, kIdent, kCall } kind = kIdent;
  double number = 0.0;
  bool integer = false;
  std::string text;  // string contents, identifier or call name
  std::vector<Value> args;
  std::size_t line = 0, col = 0;
};

struct Entry {
  std::string key;
  Value value;
  std::size_t line = 0, col = 0;
};

struct Block {
  std::string name;
  std::size_t line = 0, col = 0;
  std::vector<Entry> entries;
};

class Parser {
 public:
  Parser(std::vector<Token> tokens, std::vector<ParseError>& errors)
      : t_(std::move(tokens)), errors_(errors) {}

  std::vector<Block> run() {
    std::vector<Block> blocks;
    while (peek().kind != Tok::kEnd) {
      const Token& name = peek();
      if (name.kind != Tok::kIdent) {
        error(name, "expected a block name");
        ++p_;
        continue;
      }
      ++p_;
      if (!is_punct(peek(), "{")) {
        error(peek(), "expected '{' after block name '" + name.text + "'");
        // Skip to the end of whatever follows.
        while (peek().kind != Tok::kEnd && !is_punct(peek(), "}")) ++p_;
        if (peek().kind != Tok::kEnd) ++p_;
        continue;
      }
      ++p_;
      Block b{name.text, name.line, name.col, {}};
      entries(b);
      blocks.push_back(std::move(b));
    }
    return blocks;
  }

 private:
  const Token& peek() const { return t_[p_]; }
  static bool is_punct(const Token& t, const char* p) { return t.kind == Tok::kPunct && t.text == p; }
  void error(const Token& t, std::string msg) {
    errors_.push_back({t.line, t.col, std::move(msg), t.kind == Tok::kEnd ? "<end of input>" : t.text});
  }
  // Skip past the next ';', or stop in front of '}'.
  void sync() {
    while (peek().kind != Tok::kEnd && !is_punct(peek(), ";") && !is_punct(peek(), "}")) ++p_;
    if (is_punct(peek(), ";")) ++p_;
  }

  void entries(Block& b) {
    while (true) {
      const Token& k = peek();
      if (k.kind == Tok::kEnd) {
        errors_.push_back({b.line, b.col, "block '" + b.name + "' is not closed", b.name});
        return;
      }
      if (is_punct(k, "}")) {
        ++p_;
        return;
      }
      if (k.kind != Tok::kIdent) {
        error(k, "expected a key");
        ++p_;
        sync();
        continue;
      }
      Entry e{k.text, {}, k.line, k.col};
      ++p_;
      if (!is_punct(peek(), "=")) {
        error(peek(), "expected '=' after key '" + e.key + "'");
        sync();
        continue;
      }
      ++p_;
      std::optional<Value> v = value();
      if (!v) {
        sync();
        continue;
      }
      e.value = std::move(*v);
      if (!is_punct(peek(), ";")) {
        error(peek(), "expected ';' after the value of '" + e.key + "'");
        sync();
      } else {
        ++p_;
      }
      b.entries.push_back(std::move(e));
    }
  }

  std::optional<Value> value(int depth = 0) {
    const Token& t = peek();
    Value v;
    v.line = t.line;
    v.col = t.col;
    if (t.kind == Tok::kNumber) {
      v.kind = Value::kNumber;
      v.number = t.number;
      v.integer = t.integer;
      v.text = t.text;
      ++p_;
      return v;
    }
    if (t.kind == Tok::kString) {
      v.kind = Value::kString;
      v.text = t.text;
      ++p_;
      return v;
    }
    if (t.kind != Tok::kIdent) {
      error(t, "expected a value");
      return std::nullopt;
    }
    v.text = t.text;
    ++p_;
    if (!is_punct(peek(), "(")) {
      v.kind = Value::kIdent;
      return v;
    }
    if (depth > 0) {
      error(peek(), "nested calls are not allowed");
      return std::nullopt;
    }
    v.kind = Value::kCall;
    ++p_;
    if (is_punct(peek(), ")")) {
      ++p_;
      return v;
    }
    while (true) {
      std::optional<Value> a = value(depth + 1);
      if (!a) return std::nullopt;
      v.args.push_back(std::move(*a));
      if (is_punct(peek(), ",")) {
        ++p_;
        continue;
      }
      if (is_punct(peek(), ")")) {
        ++p_;
        return v;
      }
      error(peek(), "expected ',' or ')' in the arguments of '" + v.text + "'");
      return std::nullopt;
    }
  }

  std::vector<Token> t_;
  std::size_t p_ = 0;
  std::vector<ParseError>& errors_;
};

// ---------------------------------------------------------------- semantics

std::string describe(const Value& v) {
  switch (v.kind) {
    case Value::kNumber: return v.text;
    case Value::kString: return "\"" + v.text + "\"";
    case Value::kIdent: return v.text;
    case Value::kCall: return v.text + "(...)";
  }
  return v.text;
}

class Builder {
 public:
  explicit Builder(std::vector<ParseError>& errors) : errors_(errors) {}

  std::optional<ExperimentPlan> run(const std::vector<Block>& blocks) {
    const std::size_t before = errors_.size();
    std::map<std::string, std::size_t> seen;
    for (const Block& b : blocks) {
      if (b.name != "covariate") {
        auto [it, fresh] = seen.emplace(b.name, b.line);
        if (!fresh) {
          err(b.line, b.col, "block '" + b.name + "' repeated (first on line " +
                                 std::to_string(it->second) + ")", b.name);
          continue;
        }
      }
      if (b.name == "dataset") {
        dataset(b);
      } else if (b.name == "latent") {
        latent(b);
      } else if (b.name == "covariate") {
        covariate(b);
      } else if (b.name == "loss") {
        loss(b);
      } else if (b.name == "train") {
        train(b);
      } else if (b.name == "metrics") {
        metrics(b);
      } else {
        err(b.line, b.col,
            "unknown block '" + b.name + "' (expected dataset, latent, covariate, loss, train or metrics)",
            b.name);
      }
    }
    for (const char* required : {"dataset", "latent", "train"}) {
      if (!seen.count(required)) err(1, 1, std::string("missing required block '") + required + "'", "");
    }
    validate();
    if (errors_.size() != before) return std::nullopt;
    return plan_;
  }

 private:
  using Handler = std::function<void(const Entry&)>;

  void err(std::size_t line, std::size_t col, std::string msg, std::string token) {
    errors_.push_back({line, col, std::move(msg), std::move(token)});
  }
  void err(const Entry& e, std::string msg) { err(e.value.line, e.value.col, std::move(msg), describe(e.value)); }

  void dispatch(const Block& b, const std::map<std::string, Handler>& handlers) {
    std::map<std::string, std::size_t> seen;
    for (const Entry& e : b.entries) {
      auto [it, fresh] = seen.emplace(e.key, e.line);
      if (!fresh) {
        err(e.line, e.col, "key '" + e.key + "' repeated (first on line " + std::to_string(it->second) + ")", e.key);
        continue;
      }
      auto h = handlers.find(e.key);
      if (h == handlers.end()) {
        std::string known;
        for (const auto& [k, f] : handlers) known += (known.empty() ? "" : ", ") + k;
        err(e.line, e.col, "unknown key '" + e.key + "' in " + b.name + " (known: " + known + ")", e.key);
        continue;
      }
      h->second(e);
    }
  }

  // Typed accessors; each reports its own error and returns nullopt.
  std::optional<double> real(const Entry& e, double lo = -INFINITY) {
    if (e.value.kind != Value::kNumber) {
      err(e, "'" + e.key + "' expects a number");
      return std::nullopt;
    }
    if (e.value.number < lo) {
      err(e, "'" + e.key + "' must be >= " + format_double(lo));
      return std::nullopt;
    }
    return e.value.number;
  }
  std::optional<long long> integer(const Entry& e, long long lo, long long hi = 1LL << 53) {
    if (e.value.kind != Value::kNumber || !e.value.integer) {
      err(e, "'" + e.key + "' expects an integer");
      return std::nullopt;
    }
    if (e.value.number < static_cast<double>(lo) || e.value.number > static_cast<double>(hi)) {
      err(e, "'" + e.key + "' must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
      return std::nullopt;
    }
    return static_cast<long long>(e.value.number);
  }
  std::optional<std::string> text(const Entry& e, bool allow_ident = false) {
    if (e.value.kind == Value::kString || (allow_ident && e.value.kind == Value::kIdent)) return e.value.text;
    err(e, "'" + e.key + "' expects a quoted string");
    return std::nullopt;
  }
  template <typename T>
  std::optional<T> choice(const Entry& e, const std::vector<std::pair<const char*, T>>& options) {
    if (e.value.kind == Value::kIdent) {
      for (const auto& [name, v] : options) {
        if (e.value.text == name) return v;
      }
    }
    std::string known;
    for (const auto& [name, v] : options) known += (known.empty() ? "" : ", ") + std::string(name);
    err(e, "'" + e.key + "' expects one of: " + known);
    return std::nullopt;
  }
  std::optional<bool> boolean(const Entry& e) {
    return choice<bool>(e, {{"true", true}, {"false", false}});
  }
  std::optional<std::vector<std::size_t>> widths(const Entry& e, const char* call) {
    if (e.value.kind != Value::kCall || e.value.text != call) {
      err(e, "'" + e.key + "' expects " + call + "(width, ...)");
      return std::nullopt;
    }
    std::vector<std::size_t> out;
    for (const Value& a : e.value.args) {
      if (a.kind != Value::kNumber || !a.integer || a.number < 1 || a.number > 1e6) {
        err(a.line, a.col, "layer widths must be integers in [1, 1000000]", describe(a));
        return std::nullopt;
      }
      out.push_back(static_cast<std::size_t>(a.number));
    }
    return out;
  }

  void dataset(const Block& b) {
    DatasetDirective& d = plan_.dataset;
    dispatch(b, {
        {"kind", [&](const Entry& e) {
           if (auto v = choice<DatasetKind>(e, {{"tabular", DatasetKind::kTabular},
                                                {"mnist", DatasetKind::kMnist},
                                                {"synthetic", DatasetKind::kSynthetic}})) d.kind = *v;
         }},
        {"csv", [&](const Entry& e) { if (auto v = text(e)) d.csv = *v; }},
        {"schema", [&](const Entry& e) { if (auto v = text(e)) d.schema = *v; }},
        {"subsample", [&](const Entry& e) { if (auto v = integer(e, 0)) d.subsample = static_cast<std::size_t>(*v); }},
        {"images", [&](const Entry& e) { if (auto v = text(e)) d.images = *v; }},
        {"labels", [&](const Entry& e) { if (auto v = text(e)) d.labels = *v; }},
        {"experiment", [&](const Entry& e) {
           if (auto v = choice<Experiment>(e, {{"none", Experiment::kNone},
                                               {"successor", Experiment::kSuccessor},
                                               {"transforms", Experiment::kTransforms}})) d.experiment = *v;
         }},
        {"train_per_class", [&](const Entry& e) { if (auto v = integer(e, 1)) d.train_per_class = static_cast<std::size_t>(*v); }},
        {"eval_seeds", [&](const Entry& e) { if (auto v = integer(e, 1)) d.eval_seeds = static_cast<std::size_t>(*v); }},
        {"base_images", [&](const Entry& e) { if (auto v = integer(e, 1)) d.base_images = static_cast<std::size_t>(*v); }},
        {"rotate_steps", [&](const Entry& e) { if (auto v = integer(e, 0, 64)) d.rotate_steps = static_cast<int>(*v); }},
        {"scale_steps", [&](const Entry& e) { if (auto v = integer(e, 0, 13)) d.scale_steps = static_cast<int>(*v); }},
        {"samples", [&](const Entry& e) { if (auto v = integer(e, 2)) d.samples = static_cast<std::size_t>(*v); }},
        {"features", [&](const Entry& e) { if (auto v = integer(e, 1, 100000)) d.features = static_cast<std::size_t>(*v); }},
        {"effect", [&](const Entry& e) { if (auto v = real(e)) d.effect = *v; }},
        {"data_seed", [&](const Entry& e) { if (auto v = integer(e, 0)) d.data_seed = static_cast<std::uint64_t>(*v); }},
    });
    dataset_line_ = b.line;
  }

  std::optional<functors::Activation> activation(const Entry& e) {
    using functors::Activation;
    return choice<Activation>(e, {{"linear", Activation::kLinear}, {"tanh", Activation::kTanh},
                                  {"relu", Activation::kRelu}, {"sigmoid", Activation::kSigmoid}});
  }

  void latent(const Block& b) {
    latent_line_ = b.line;
    dispatch(b, {
        {"dim", [&](const Entry& e) {
           if (auto v = integer(e, 1, 100000)) plan_.latent.n = static_cast<std::size_t>(*v);
           latent_line_ = e.line;
         }},
        {"encoder", [&](const Entry& e) { if (auto v = widths(e, "mlp")) plan_.latent.hidden = *v; }},
        {"activation", [&](const Entry& e) { if (auto v = activation(e)) plan_.latent.activation = *v; }},
        {"decoder", [&](const Entry& e) { if (auto v = activation(e)) plan_.decoder_output = *v; }},
        {"classifier", [&](const Entry& e) { if (auto v = widths(e, "mlp")) plan_.classifier_hidden = *v; }},
    });
  }

  void covariate(const Block& b) {
    using namespace pairing;
    CovariateSpec s;
    std::optional<PairPolicy> policy;
    std::optional<double> lambda;
    std::size_t morphism_line = 0, morphism_col = 0, name_line = b.line;
    dispatch(b, {
        {"name", [&](const Entry& e) {
           if (auto v = text(e, true)) s.name = *v;
           name_line = e.line;
         }},
        {"column", [&](const Entry& e) { if (auto v = text(e, true)) s.column = *v; }},
        {"kind", [&](const Entry& e) {
           if (auto v = choice<CovariateKind>(e, {{"categorical", CovariateKind::kCategorical},
                                                  {"ordinal", CovariateKind::kOrdinal}})) s.kind = *v;
         }},
        {"bins", [&](const Entry& e) { bins(e, s.bins); }},
        {"constraint", [&](const Entry& e) {
           if (auto v = choice<Constraint>(e, {{"invariance", Constraint::kInvariance},
                                               {"equivariance", Constraint::kEquivariance}})) s.constraint = *v;
         }},
        {"morphism", [&](const Entry& e) {
           morphism_line = e.line;
           morphism_col = e.value.col;
           if (e.value.kind == Value::kIdent && e.value.text == "none") {
             s.morphism = MorphismKind::kNone;
             return;
           }
           if (e.value.kind != Value::kCall || (e.value.text != "linear" && e.value.text != "orthogonal") ||
               e.value.args.size() != 1 || e.value.args[0].kind != Value::kNumber ||
               !e.value.args[0].integer || e.value.args[0].number < 1 || e.value.args[0].number > 100000) {
             err(e, "'morphism' expects none, linear(n) or orthogonal(n)");
             return;
           }
           s.morphism = e.value.text == "linear" ? MorphismKind::kLinear : MorphismKind::kOrthogonal;
           s.morphism_dim = static_cast<std::size_t>(e.value.args[0].number);
         }},
        {"penalty", [&](const Entry& e) {
           if (auto v = choice<Penalty>(e, {{"pairs", Penalty::kPairs}, {"mmd", Penalty::kMmd}})) s.penalty = *v;
         }},
        {"policy", [&](const Entry& e) {
           if (auto v = choice<PairPolicy>(e, {{"all", PairPolicy::kAll}, {"matched", PairPolicy::kMatched}})) policy = *v;
         }},
        {"include_d0", [&](const Entry& e) { if (auto v = boolean(e)) s.include_d0 = *v; }},
        {"match_label", [&](const Entry& e) { if (auto v = boolean(e)) s.match_label = *v; }},
        {"lambda", [&](const Entry& e) { lambda = real(e, 0.0); }},
    });
    if (s.name.empty()) {
      err(b.line, b.col, "covariate block needs a name", "covariate");
      return;
    }
    s.policy = policy.value_or(s.constraint == Constraint::kEquivariance ? PairPolicy::kMatched : PairPolicy::kAll);
    if (auto it = covariate_lines_.find(s.name); it != covariate_lines_.end()) {
      err(name_line, 1, "covariate '" + s.name + "' declared twice (lines " + std::to_string(it->second) +
                            " and " + std::to_string(name_line) + ")", s.name);
      return;
    }
    covariate_lines_[s.name] = name_line;
    try {
      s.validate();
    } catch (const Error& e) {
      err(b.line, b.col, e.message(), s.name);
    }
    morphism_lines_.push_back({morphism_line, morphism_col});
    plan_.covariates.push_back(s);
    plan_.train.weights.lambda_per_covariate[s.name] = lambda.value_or(objective::kDefaultCovariateLambda);
  }

  void bins(const Entry& e, pairing::Binning& out) {
    using pairing::BinRule;
    const Value& v = e.value;
    auto number_args = [&](std::vector<double>& dst) {
      for (const Value& a : v.args) {
        if (a.kind != Value::kNumber) {
          err(a.line, a.col, "bin arguments must be numbers", describe(a));
          return false;
        }
        dst.push_back(a.number);
      }
      return true;
    };
    if (v.kind == Value::kIdent && (v.text == "identity" || v.text == "levels")) {
      out.rule = v.text == "identity" ? BinRule::kIdentity : BinRule::kLevels;
      return;
    }
    std::vector<double> args;
    if (v.kind == Value::kCall && v.text == "width" && number_args(args)) {
      if (args.empty() || args.size() > 2) {
        err(e, "width(w) or width(w, anchor) expected");
        return;
      }
      out.rule = BinRule::kWidth;
      out.width = args[0];
      out.anchor = args.size() > 1 ? args[1] : 0.0;
      return;
    }
    if (v.kind == Value::kCall && v.text == "edges" && number_args(args)) {
      out.rule = BinRule::kEdges;
      out.edges = args;
      return;
    }
    if (v.kind != Value::kCall || (v.text != "width" && v.text != "edges")) {
      err(e, "'bins' expects identity, levels, width(w[, anchor]) or edges(e0, e1, ...)");
    }
  }

  void loss(const Block& b) {
    objective::LossWeights& w = plan_.train.weights;
    dispatch(b, {
        {"reconstruction", [&](const Entry& e) { if (auto v = real(e, 0.0)) w.lambda_r = *v; }},
        {"prediction", [&](const Entry& e) { if (auto v = real(e, 0.0)) w.lambda_p = *v; }},
        {"structure", [&](const Entry& e) { if (auto v = real(e, 0.0)) w.lambda_s = *v; }},
        {"orthogonality", [&](const Entry& e) { if (auto v = real(e, 0.0)) w.mu_orth = *v; }},
        {"mmd_sigma", [&](const Entry& e) { if (auto v = real(e, 0.0)) plan_.train.mmd_sigma = *v; }},
    });
    loss_line_ = b.line;
  }

  void train(const Block& b) {
    trainer::TrainConfig& t = plan_.train;
    dispatch(b, {
        {"epochs", [&](const Entry& e) { if (auto v = integer(e, 1, 1000000)) t.epochs = static_cast<int>(*v); }},
        {"batch", [&](const Entry& e) { if (auto v = integer(e, 1)) t.batch_size = static_cast<std::size_t>(*v); }},
        {"optimizer", [&](const Entry& e) {
           if (auto v = choice<trainer::OptimizerKind>(e, {{"adam", trainer::OptimizerKind::kAdam},
                                                           {"sgd", trainer::OptimizerKind::kSgd}})) t.optimizer.kind = *v;
         }},
        {"lr", [&](const Entry& e) {
           if (auto v = real(e)) {
             if (*v > 0) t.optimizer.learning_rate = *v; else err(e, "'lr' must be positive");
           }
         }},
        {"beta1", [&](const Entry& e) {
           if (auto v = real(e, 0.0)) {
             if (*v < 1.0) t.optimizer.beta1 = *v; else err(e, "'beta1' must be in [0, 1)");
           }
         }},
        {"beta2", [&](const Entry& e) {
           if (auto v = real(e, 0.0)) {
             if (*v < 1.0) t.optimizer.beta2 = *v; else err(e, "'beta2' must be in [0, 1)");
           }
         }},
        {"eps", [&](const Entry& e) { if (auto v = real(e, 0.0)) t.optimizer.eps = *v; }},
        {"seed", [&](const Entry& e) { if (auto v = integer(e, 0)) t.seed = static_cast<std::uint64_t>(*v); }},
        {"folds", [&](const Entry& e) { if (auto v = integer(e, 2, 1000000)) t.folds = static_cast<std::size_t>(*v); }},
        {"max_pairs", [&](const Entry& e) { if (auto v = integer(e, 1)) t.max_pairs = static_cast<std::size_t>(*v); }},
        {"max_power", [&](const Entry& e) { if (auto v = integer(e, 1, 4096)) t.max_power = static_cast<int>(*v); }},
        {"retract", [&](const Entry& e) { if (auto v = boolean(e)) t.retract = *v; }},
    });
  }

  void metrics(const Block& b) {
    MetricsSelection& m = plan_.metrics;
    dispatch(b, {
        {"nuisance", [&](const Entry& e) { if (auto v = text(e, true)) m.nuisance = *v; }},
        {"mmd_sigma", [&](const Entry& e) {
           if (auto v = real(e)) {
             if (*v > 0) m.mmd_sigma = *v; else err(e, "'mmd_sigma' must be positive");
           }
         }},
        {"adv_repeats", [&](const Entry& e) { if (auto v = integer(e, 1, 1000)) m.adv_repeats = static_cast<std::size_t>(*v); }},
        {"adv_train_fraction", [&](const Entry& e) {
           if (auto v = real(e)) {
             if (*v > 0 && *v < 1) m.adv_train_fraction = *v; else err(e, "'adv_train_fraction' must be in (0, 1)");
           }
         }},
        {"adv_iterations", [&](const Entry& e) { if (auto v = integer(e, 1, 1000000)) m.adv_iterations = static_cast<std::size_t>(*v); }},
        {"adv_l2", [&](const Entry& e) { if (auto v = real(e, 0.0)) m.adv_l2 = *v; }},
        {"all_rows", [&](const Entry& e) { if (auto v = boolean(e)) m.all_rows = *v; }},
        {"select", [&](const Entry& e) {
           static const std::set<std::string> known = {"acc", "adv", "cs", "d", "mmd"};
           if (e.value.kind != Value::kCall || e.value.text != "list") {
             err(e, "'select' expects list(acc, mmd, adv, d, cs)");
             return;
           }
           std::set<std::string> chosen;
           for (const Value& a : e.value.args) {
             if (a.kind != Value::kIdent || !known.count(a.text)) {
               err(a.line, a.col, "unknown metric (expected acc, mmd, adv, d or cs)", describe(a));
               return;
             }
             chosen.insert(a.text);
           }
           m.select.assign(chosen.begin(), chosen.end());
         }},
    });
  }

  void validate() {
    const ExperimentPlan& p = plan_;
    for (std::size_t i = 0; i < p.covariates.size(); ++i) {
      const CovariateSpec& s = p.covariates[i];
      const auto [mline, mcol] = morphism_lines_[i];
      if (s.morphism != pairing::MorphismKind::kNone && s.morphism_dim != p.latent.n) {
        err(mline, mcol, "morphism of covariate '" + s.name + "' has dimension " +
                             std::to_string(s.morphism_dim) + " (line " + std::to_string(mline) +
                             ") but the latent dim is " + std::to_string(p.latent.n) + " (line " +
                             std::to_string(latent_line_) + ")",
            std::to_string(s.morphism_dim));
      }
    }
    if (!p.metrics.nuisance.empty() && !covariate_lines_.count(p.metrics.nuisance)) {
      err(1, 1, "metrics nuisance '" + p.metrics.nuisance + "' is not a declared covariate", p.metrics.nuisance);
    }
    const DatasetDirective& d = p.dataset;
    if (dataset_line_) {
      if (d.kind == DatasetKind::kTabular && (d.csv.empty() || d.schema.empty())) {
        err(dataset_line_, 1, "tabular dataset needs csv and schema", "dataset");
      }
      if (d.kind == DatasetKind::kMnist && (d.images.empty() || d.labels.empty())) {
        err(dataset_line_, 1, "mnist dataset needs images and labels", "dataset");
      }
      if (d.experiment == Experiment::kTransforms && d.rotate_steps == 0 && d.scale_steps == 0) {
        err(dataset_line_, 1, "transforms experiment needs rotate_steps or scale_steps", "dataset");
      }
      if (d.experiment != Experiment::kNone && d.kind != DatasetKind::kMnist) {
        err(dataset_line_, 1, "image experiments need an mnist dataset", "dataset");
      }
    }
    bool any = p.train.weights.lambda_r > 0 || p.train.weights.lambda_p > 0;
    for (const auto& s : p.covariates) {
      any = any || (p.train.weights.lambda_s * p.train.weights.covariate(s.name) > 0);
    }
    if (!any) err(loss_line_ ? loss_line_ : 1, 1, "every loss weight is zero", "loss");
    try {
      p.latent.validate();
      p.train.validate();
    } catch (const Error& e) {
      err(loss_line_ ? loss_line_ : 1, 1, e.message(), "loss");
    }
  }

  ExperimentPlan plan_;
  std::vector<ParseError>& errors_;
  std::map<std::string, std::size_t> covariate_lines_;
  std::vector<std::pair<std::size_t, std::size_t>> morphism_lines_;
  std::size_t latent_line_ = 0, dataset_line_ = 0, loss_line_ = 0;
};

}  // namespace

std::string ParseError::to_string() const {
  std::string s = std::to_string(line) + ":" + std::to_string(column) + ": " + message;
  if (!token.empty()) s += " (near '" + token + "')";
  return s;
}

ParseResult parse(std::string_view source) {
  ParseResult r;
  std::vector<Token> tokens = Lexer(source, r.errors).run();
  std::vector<Block> blocks = Parser(std::move(tokens), r.errors).run();
  const bool syntax_ok = r.errors.empty();
  std::optional<ExperimentPlan> plan = Builder(r.errors).run(blocks);
  if (syntax_ok && r.errors.empty()) r.plan = std::move(plan);
  return r;
}

ParseResult parse_file(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    ParseResult r;
    r.errors.push_back({0, 0, e.what(), path});
    return r;
  }
  return parse(text);
}

}  // namespace catharm::specdsl
