// SPDX-License-Identifier: Apache-2.0
#include "seqloss/synthetic.hpp"

#include <array>
#include <sstream>
#include <string>

#include "seqloss/random.hpp"

namespace seqloss {

namespace {

constexpr std::array kNouns = {"name",  "size",   "count",   "user",  "file",  "buffer",
                               "socket", "color", "width",   "height", "index", "value",
                               "title", "score",  "path",    "message", "record", "timer",
                               "cache", "node",   "port",    "level", "speed", "owner"};
constexpr std::array kTypes = {"int", "string", "long", "double", "boolean", "object"};

struct Template {
  const char *code;
  const char *summary;
};

// {n} is the noun, {t} the type.
constexpr std::array kTemplates = {
    Template{"public {t} get{N} ( ) { return {n} ; }", "returns the {n}"},
    Template{"public void set{N} ( {t} {n} ) { this . {n} = {n} ; }", "sets the {n}"},
    Template{"public void add{N} ( {t} item ) { {n}s . add ( item ) ; }", "adds a {n} to the list"},
    Template{"public void remove{N} ( {t} item ) { {n}s . remove ( item ) ; }",
             "removes the {n} from the list"},
    Template{"public boolean has{N} ( ) { return {n} != null ; }", "checks whether the {n} exists"},
    Template{"public void print{N} ( ) { system . out . println ( {n} ) ; }", "prints the {n}"},
    Template{"public void reset{N} ( ) { {n} = 0 ; }", "resets the {n} to zero"},
    Template{"public void load{N} ( string path ) { {n} = read ( path ) ; }",
             "loads the {n} from a file"},
};

std::string expand(std::string_view pattern, const std::string &noun, const std::string &type) {
  std::string capital = noun;
  capital[0] = static_cast<char>(capital[0] - 'a' + 'A');
  std::string out;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    if (pattern[i] == '{' && i + 2 < pattern.size() && pattern[i + 2] == '}') {
      switch (pattern[i + 1]) {
        case 'n': out += noun; break;
        // camelCase identifiers are split into separate tokens, as an upstream tokenizer would.
        case 'N': out += " " + capital; break;
        case 't': out += type; break;
        default: out.append(pattern.substr(i, 3));
      }
      i += 2;
    } else {
      out += pattern[i];
    }
  }
  return out;
}

std::vector<std::string> split_ws(const std::string &s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) {
    for (auto &c : tok) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.push_back(tok);
  }
  return out;
}

}  // namespace

std::vector<RawRecord> synthetic_records(std::size_t count, std::uint64_t seed,
                                         const std::string &prefix) {
  Rng rng(seed);
  std::vector<RawRecord> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const Template &tpl = kTemplates[rng.below(kTemplates.size())];
    const std::string noun = kNouns[rng.below(kNouns.size())];
    const std::string type = kTypes[rng.below(kTypes.size())];
    RawRecord r;
    r.id = prefix + "-" + std::to_string(k);
    r.code = split_ws(expand(tpl.code, noun, type));
    r.summary = split_ws(expand(tpl.summary, noun, type));
    out.push_back(std::move(r));
  }
  return out;
}

SyntheticSplits synthetic_splits(std::size_t train, std::size_t val, std::size_t test,
                                 std::uint64_t seed) {
  return {synthetic_records(train, seed, "train"), synthetic_records(val, seed + 1, "val"),
          synthetic_records(test, seed + 2, "test")};
}

}  // namespace seqloss
