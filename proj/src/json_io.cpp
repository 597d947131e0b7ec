#include "dfc/json_io.hpp"

#include <cstdio>
#include <fstream>

namespace dfc {

Json domain_to_json(const FlatDomain& dom) {
  Json j;
  j["d"] = dom.d;
  j["kind"] = dom.kind == DomainKind::Box ? "box" : "torus";
  Json ext = Json::array();
  for (const auto& e : dom.extent) ext.push_back(rational_to_string(e));
  j["extent"] = ext;
  j["grid"] = dom.grid;
  return j;
}

FlatDomain domain_from_json(const Json& j) {
  FlatDomain dom;
  dom.d = j.at("d").get<int>();
  std::string kind = j.value("kind", "box");
  if (kind == "box") {
    dom.kind = DomainKind::Box;
  } else if (kind == "torus") {
    dom.kind = DomainKind::Torus;
  } else {
    throw std::domain_error("domain kind must be box or torus");
  }
  dom.extent.assign(dom.d, Rational(1));
  if (j.contains("extent")) {
    auto ext = j.at("extent");
    for (int a = 0; a < dom.d && a < int(ext.size()); ++a)
      dom.extent[a] = rational_from_string(ext[a].get<std::string>());
  }
  dom.grid.assign(dom.d, 0);
  if (j.contains("grid")) {
    auto g = j.at("grid");
    for (int a = 0; a < dom.d && a < int(g.size()); ++a) dom.grid[a] = g[a].get<int>();
  }
  return dom;
}

Json value_to_json(const DoubleForm<CRational>& v) {
  Json j;
  j["d"] = v.dim();
  j["k"] = v.form_degree();
  j["m"] = v.vector_degree();
  Json coeffs = Json::array();
  for (const auto& [key, c] : v.coeffs()) {
    Json entry;
    entry["form"] = key.form;
    entry["vector"] = key.vec;
    entry["re"] = rational_to_string(c.re);
    entry["im"] = rational_to_string(c.im);
    coeffs.push_back(entry);
  }
  j["coeffs"] = coeffs;
  return j;
}

DoubleForm<CRational> value_from_json(const Json& j) {
  DoubleForm<CRational> v(j.at("d").get<int>(), j.at("k").get<int>(),
                          j.at("m").get<int>());
  for (const auto& entry : j.at("coeffs")) {
    MultiIndexPair key{entry.at("form").get<Index>(), entry.at("vector").get<Index>()};
    CRational c(rational_from_string(entry.at("re").get<std::string>()),
                entry.contains("im")
                    ? rational_from_string(entry.at("im").get<std::string>())
                    : Rational(0));
    v.set(key, c);
  }
  return v;
}

Json field_to_json(const PolyField& f) {
  Json j;
  j["domain"] = domain_to_json(f.domain);
  j["k"] = f.k();
  j["m"] = f.m();
  Json coeffs = Json::array();
  for (const auto& [key, p] : f.value.coeffs()) {
    Json entry;
    entry["form"] = key.form;
    entry["vector"] = key.vec;
    Json poly = Json::array();
    Poly promoted = p.promoted(f.d());
    for (const auto& [exps, c] : promoted.terms()) {
      Json term;
      term["exps"] = exps;
      term["coef"] = rational_to_string(c);
      poly.push_back(term);
    }
    entry["poly"] = poly;
    coeffs.push_back(entry);
  }
  j["coeffs"] = coeffs;
  return j;
}

PolyField field_from_json(const Json& j) {
  FlatDomain dom = domain_from_json(j.at("domain"));
  int k = j.at("k").get<int>(), m = j.at("m").get<int>();
  PolyForm value(dom.d, k, m);
  for (const auto& entry : j.at("coeffs")) {
    MultiIndexPair key{entry.at("form").get<Index>(), entry.at("vector").get<Index>()};
    Poly p(dom.d);
    for (const auto& term : entry.at("poly")) {
      p.add_term(term.at("exps").get<Poly::Exps>(),
                 rational_from_string(term.at("coef").get<std::string>()));
    }
    value.set(key, p);
  }
  return PolyField{dom, value};
}

Json identity_report_to_json(const IdentityReport& rep) {
  Json j;
  j["schema"] = "1";
  j["pass"] = rep.all_pass();
  j["total_checked"] = rep.total_checked();
  Json entries = Json::array();
  for (const auto& e : rep.entries) {
    Json je;
    je["name"] = e.name;
    je["d"] = e.d;
    je["checked"] = e.checked;
    je["failed"] = e.failed;
    entries.push_back(je);
  }
  j["identities"] = entries;
  return j;
}

Json ellipticity_report_to_json(const EllipticityReport& rep) {
  Json j;
  j["schema"] = "1";
  Json c;
  c["d"] = rep.d;
  c["k"] = rep.k;
  c["m"] = rep.m;
  c["set"] = boundary_set_name(rep.set);
  j["case"] = c;
  j["samples"] = rep.samples;
  j["min_sigma"] = rep.min_sigma;
  j["min_sigma_interior"] = rep.min_sigma_pb;
  j["threshold"] = rep.threshold;
  j["dims_match"] = rep.dims_match;
  j["pass"] = rep.pass;
  return j;
}

Json solve_result_to_json(const SolveResult& res) {
  Json j;
  j["schema"] = "1";
  j["iterations"] = res.iterations;
  j["relative_residual"] = res.relative_residual;
  j["residual_history"] = res.residual_history;
  j["kernel_dim"] = res.kernel_dim;
  j["kernel_component_removed"] = res.kernel_component_removed;
  return j;
}

Json decomposition_to_json(const DecompositionResult& dec) {
  Json j;
  j["schema"] = "1";
  j["residual"] = dec.residual;
  Json gram = Json::array();
  for (int i = 0; i < 5; ++i) {
    Json row = Json::array();
    for (int jj = 0; jj < 5; ++jj) row.push_back(dec.gram(i, jj));
    gram.push_back(row);
  }
  j["gram"] = gram;
  j["parts"] = Json::array({"EE", "CC", "EC", "CE", "BH"});
  return j;
}

namespace {

void dump_rec(const Json& j, std::string& out, int indent, int depth) {
  auto pad = [&](int dep) { out.append(std::size_t(indent) * dep, ' '); };
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        pad(depth + 1);
        out += Json(it.key()).dump();
        out += ": ";
        dump_rec(it.value(), out, indent, depth + 1);
      }
      out += "\n";
      pad(depth);
      out += "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& item : j) {
        if (!first) out += ",\n";
        first = false;
        pad(depth + 1);
        dump_rec(item, out, indent, depth + 1);
      }
      out += "\n";
      pad(depth);
      out += "]";
      return;
    }
    case Json::value_t::number_float: {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.17g", j.get<double>());
      out += buf;
      return;
    }
    default:
      out += j.dump();
      return;
  }
}

}  // namespace

std::string dump_deterministic(const Json& j, int indent) {
  std::string out;
  dump_rec(j, out, indent, 0);
  out += "\n";
  return out;
}

void write_report(const Json& j, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open report path: " + path);
  os << dump_deterministic(j);
  if (!os) throw std::runtime_error("failed writing report: " + path);
}

std::string convergence_csv(const std::vector<double>& h, const std::vector<double>& err) {
  std::string out = "h,err,order\n";
  char buf[128];
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (i == 0) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,\n", h[i], err[i]);
    } else {
      double order = std::log(err[i - 1] / err[i]) / std::log(h[i - 1] / h[i]);
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", h[i], err[i], order);
    }
    out += buf;
  }
  return out;
}

}  // namespace dfc
