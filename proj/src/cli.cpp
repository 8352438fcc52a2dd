#include "xsum/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "xsum/error.hpp"
#include "xsum/exec.hpp"
#include "xsum/generate.hpp"
#include "xsum/pattern.hpp"
#include "xsum/reconstruct.hpp"
#include "xsum/relpaths.hpp"
#include "xsum/store.hpp"
#include "xsum/summary.hpp"

namespace xsum {

namespace {

namespace fs = std::filesystem;

struct UsageError {
  std::string message;
};

bool is_corruption(ErrorCode c) {
  switch (c) {
    case ErrorCode::BadMagic:
    case ErrorCode::UnsupportedVersion:
    case ErrorCode::TruncatedInput:
    case ErrorCode::CorruptStore:
    case ErrorCode::VersionMismatch:
    case ErrorCode::SummaryMismatch:
    case ErrorCode::UnsortedInput:
      return true;
    default:
      return false;
  }
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw UsageError{"cannot read " + p.string()};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out || !(out << text)) throw UsageError{"cannot write " + p.string()};
}

struct QueryArgs {
  std::string xpath;
  std::string pattern;
};

void add_query_options(CLI::App* sub, QueryArgs& q) {
  auto* x = sub->add_option("--xpath", q.xpath, "XPath subset query");
  auto* p = sub->add_option("--pattern", q.pattern, "s-expression tree pattern");
  x->excludes(p);
}

QueryPattern parse_query(const QueryArgs& q) {
  if (q.xpath.empty() == q.pattern.empty()) throw UsageError{"exactly one of --xpath or --pattern is required"};
  return q.xpath.empty() ? parse_pattern(q.pattern) : parse_xpath(q.xpath);
}

void print_outline(const PathSummary& s, std::ostream& out) {
  for (PathId p = 1; p <= s.size(); ++p)
    out << std::string(2 * (s.depth(p) - 1), ' ') << p << ':' << s.label(p) << '[' << annotation_symbol(s.annotation(p))
        << "]\n";
}

void print_stats(const PathStore& store, std::ostream& out) {
  const PathSummary& s = store.summary();
  const StoreCounts& c = store.counts();
  out << "paths: " << s.size() << '\n'
      << "elements: " << c.elements << '\n'
      << "attributes: " << c.attributes << '\n'
      << "texts: " << c.texts << '\n'
      << "height: " << c.height << '\n'
      << "encoding: " << (s.encoding() == Encoding::Precomputed ? "precomputed" : "direct") << '\n';
  PathSummary pre = s.encoding() == Encoding::Precomputed ? s : s.precompute();
  out << "bytes xml-direct: " << serialize(s, SummaryFormat::XmlDirect).size() << '\n'
      << "bytes xml-precomputed: " << serialize(pre, SummaryFormat::XmlPrecomputed).size() << '\n'
      << "bytes binary-direct: " << serialize(s, SummaryFormat::BinaryDirect).size() << '\n'
      << "bytes binary-precomputed: " << serialize(pre, SummaryFormat::BinaryPrecomputed).size() << '\n';
}

std::optional<Shape> parse_shape(const std::string& s) {
  if (s == "chain") return Shape::Chain;
  if (s == "fanout") return Shape::Fanout;
  if (s == "recursive") return Shape::Recursive;
  if (s == "textheavy") return Shape::TextHeavy;
  return std::nullopt;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Path-summary XML store and query engine", "xsum"};
  app.require_subcommand(1);

  std::string doc, store_dir, out_file;
  bool precompute = false, dot = false, as_xml = false, stats = false;
  bool explain = false, no_minimize = false;
  QueryArgs qa;
  std::vector<PathId> root_paths;
  std::string algo = "reconstruct";
  std::string shape = "fanout";
  GenSpec gen;

  auto* build = app.add_subcommand("build", "parse a document and write its store");
  build->add_option("doc", doc, "XML document")->required();
  build->add_option("store", store_dir, "store directory")->required();
  build->add_flag("--precompute", precompute, "store the summary with cluster labels");

  auto* summary = app.add_subcommand("summary", "print the path summary");
  summary->add_option("store", store_dir, "store directory")->required();
  auto* f_dot = summary->add_flag("--dot", dot, "Graphviz DOT output");
  auto* f_xml = summary->add_flag("--xml", as_xml, "XML serialization");
  auto* f_stats = summary->add_flag("--stats", stats, "sizes and counts");
  f_dot->excludes(f_xml)->excludes(f_stats);
  f_xml->excludes(f_stats);

  auto* fanin = app.add_subcommand("fanin", "per-tag fan-in and median fan-in");
  fanin->add_option("store", store_dir, "store directory")->required();

  auto* paths = app.add_subcommand("paths", "print the relevant paths of a pattern");
  paths->add_option("store", store_dir, "store directory")->required();
  add_query_options(paths, qa);
  paths->add_flag("--no-minimize", no_minimize, "keep trivial and useless paths");

  auto* query = app.add_subcommand("query", "evaluate a pattern and print result rows");
  query->add_option("store", store_dir, "store directory")->required();
  add_query_options(query, qa);
  query->add_flag("--explain", explain, "print the plan before the rows");
  query->add_flag("--no-minimize", no_minimize, "keep trivial and useless paths");

  auto* recon = app.add_subcommand("reconstruct", "serialize stored subtrees");
  recon->add_option("store", store_dir, "store directory")->required();
  auto* r_x = recon->add_option("--xpath", qa.xpath, "wrap each result row of this query in <res>");
  auto* r_p = recon->add_option("--path", root_paths, "root summary path (repeatable, antichain)");
  r_x->excludes(r_p);
  recon->add_option("--algo", algo, "reconstruct or sou")->check(CLI::IsMember({"reconstruct", "sou"}));
  recon->add_option("--out", out_file, "output file instead of stdout");

  auto* gencmd = app.add_subcommand("gen", "write a synthetic document");
  gencmd->add_option("--shape", shape, "chain, fanout, recursive or textheavy")
      ->check(CLI::IsMember({"chain", "fanout", "recursive", "textheavy"}));
  gencmd->add_option("--depth", gen.depth, "element levels including the root");
  gencmd->add_option("--fanout", gen.fanout, "children per non-leaf element");
  gencmd->add_option("--prob", gen.recursion_prob, "recursion probability")->check(CLI::Range(0.0, 1.0));
  gencmd->add_option("--seed", gen.seed, "random seed");
  gencmd->add_option("--out", out_file, "output file")->required();

  // Name of the subcommand the user asked for, for usage messages.
  CLI::App* failing = &app;
  for (const auto& a : args)
    for (CLI::App* sub : {build, summary, fanin, paths, query, recon, gencmd})
      if (failing == &app && a == sub->get_name()) failing = sub;

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << failing->help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << failing->help();
    return 1;
  }

  try {
    if (*build) {
      PathStore store = PathStore::from_xml(read_file(doc), precompute);
      store.persist(store_dir);
      const StoreCounts& c = store.counts();
      out << "built " << store_dir << ": " << c.elements << " elements, " << c.attributes << " attributes, "
          << c.texts << " texts, " << store.summary().size() << " paths\n";
      return 0;
    }
    if (*gencmd) {
      gen.shape = *parse_shape(shape);
      write_file(out_file, generate(gen));
      out << "wrote " << out_file << ": " << generated_size(gen) << " elements\n";
      return 0;
    }

    if (!fs::is_directory(store_dir)) throw UsageError{"no store directory " + store_dir};
    std::optional<QueryPattern> q;
    if (*paths || *query) q = parse_query(qa);
    PathStore store = PathStore::open(store_dir);
    const PathSummary& s = store.summary();

    if (*summary) {
      if (dot)
        out << export_dot(s);
      else if (as_xml)
        out << serialize(s, s.encoding() == Encoding::Precomputed ? SummaryFormat::XmlPrecomputed
                                                                  : SummaryFormat::XmlDirect)
            << '\n';
      else if (stats)
        print_stats(store, out);
      else
        print_outline(s, out);
      return 0;
    }
    if (*fanin) {
      FanInReport r = fanin_report(s, store.tag_counts());
      for (const auto& [tag, t] : r.tags) out << tag << " fin=" << t.fin << " count=" << t.count << '\n';
      out << "max fin = " << r.max_fin << '\n' << "mf = " << std::setprecision(6) << r.mf << '\n';
      return 0;
    }
    if (*paths) {
      RelevantPathForest forest = compute_relevant_paths(s, *q, {.minimize = !no_minimize});
      out << forest.describe();
      out << "tuples: " << enumerate_tuples(forest, tuple_cap_from_env()).size() << '\n';
      return 0;
    }
    if (*query) {
      QueryResult r = run_query(store, *q, {.minimize = !no_minimize});
      if (explain) out << (r.satisfiable ? r.explain : std::string("unsatisfiable\n"));
      for (const auto& row : r.table.rows) out << format_row(row) << '\n';
      return 0;
    }
    if (*recon) {
      std::string xml;
      if (!qa.xpath.empty()) {
        if (algo != "reconstruct") throw UsageError{"--algo sou works on --path roots only"};
        QueryResult r = run_query(store, parse_xpath(qa.xpath));
        xml = xmlize(r.table, store, "res");
      } else {
        if (root_paths.empty()) throw UsageError{"one of --xpath or --path is required"};
        xml = algo == "sou" ? sorted_outer_union(store, root_paths) : reconstruct(store, root_paths);
      }
      if (out_file.empty())
        out << xml << '\n';
      else
        write_file(out_file, xml);
      return 0;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.message << "\n" << failing->help();
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_corruption(e.code()) ? 2 : 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace xsum
