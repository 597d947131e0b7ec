// Boundary projections and first-order boundary operators on box faces
// (flat specialization, second fundamental form pluggable and zero by
// default), plus quadrature verification of the integration-by-parts
// formulas.
#pragma once

#include <optional>

#include "dfc/field.hpp"
#include "dfc/gridfield.hpp"

namespace dfc {

struct Face {
  int axis = 1;  // 1..d
  int side = 0;  // 0: x_axis = 0, 1: x_axis = extent
};

// The inward normal is +e_axis on side 0 and -e_axis on side 1.
inline int normal_orientation(const Face& f) { return f.side == 0 ? +1 : -1; }

// Sign of the induced face orientation relative to the increasing-axes frame
// of the face: (tangent frame, inward normal) is positively oriented, so the
// sign is (-1)^{d+axis} times the normal orientation.
inline int face_orientation_sign(const Face& f, int d) {
  int s = ((d + f.axis) % 2 == 0) ? +1 : -1;
  return normal_orientation(f) * s;
}

inline std::vector<Face> all_faces(const FlatDomain& dom) {
  if (dom.kind == DomainKind::Torus)
    throw std::domain_error("all_faces: torus has no boundary");
  std::vector<Face> out;
  for (int a = 1; a <= dom.d; ++a)
    for (int side = 0; side < 2; ++side) out.push_back({a, side});
  return out;
}

inline FlatDomain face_domain(const FlatDomain& dom, const Face& f) {
  FlatDomain out;
  out.d = dom.d - 1;
  out.kind = DomainKind::Box;
  for (int a = 1; a <= dom.d; ++a) {
    if (a == f.axis) continue;
    out.extent.push_back(dom.extent[a - 1]);
    if (!dom.grid.empty()) out.grid.push_back(dom.grid[a - 1]);
  }
  return out;
}

// Relabel a bulk tangential axis into the face frame (and back).
inline int to_face_axis(const Face& f, int bulk_axis) {
  return bulk_axis > f.axis ? bulk_axis - 1 : bulk_axis;
}
inline int to_bulk_axis(const Face& f, int face_axis) {
  return face_axis >= f.axis ? face_axis + 1 : face_axis;
}

inline Index relabel_to_face(const Face& f, const Index& idx) {
  Index out;
  out.reserve(idx.size());
  for (int v : idx) out.push_back(to_face_axis(f, v));
  return out;
}

// Face-local Hodge dual with the induced orientation (a lives in the face
// fiber, so the bulk dimension is a.dim() + 1).
template <class S>
DoubleForm<S> face_hodge(const Face& f, const DoubleForm<S>& a, Side side) {
  auto r = hodge(a, side);
  if (face_orientation_sign(f, a.dim() + 1) < 0) r = -r;
  return r;
}

// --- polynomial-mode traces -------------------------------------------------

struct PolyTrace {
  Face face;
  PolyField tt, nt, tn, nn;  // face-local fields of bidegree (k,m),(k-1,m),(k,m-1),(k-1,m-1)
};

PolyTrace face_projections(const PolyField& psi, const Face& face);

// Lift a face-local form back into bulk coordinates (tangential keys only).
PolyForm lift_to_bulk(const FlatDomain& dom, const Face& face, const PolyForm& a);

struct FirstOrderTraces {
  Face face;
  PolyField T;      // (k,m)
  PolyField Tstar;  // (k-1,m-1)
  PolyField F;      // (k,m-1)
  PolyField Fstar;  // (k-1,m)
};

// Commutator-defined boundary operators, evaluated through their first-order
// expansions with the face second fundamental form h (default zero) carried
// as pluggable data.
FirstOrderTraces first_order_boundary(const PolyField& psi, const Face& face,
                                      const std::optional<PolyForm>& h_face = {});

// Direct commutator route (flat only), kept as an independent oracle:
// T = 1/2 (Pnt d - d0 Pnt) + 1/2 (Ptn dV - dV0 Ptn), etc.
FirstOrderTraces first_order_boundary_direct(const PolyField& psi, const Face& face);

// S_h: replace one form argument by its shape-operator image.
template <class S>
DoubleForm<S> shape_replace(const DoubleForm<S>& h, const DoubleForm<S>& a) {
  DoubleForm<S> out(a.dim(), a.form_degree(), a.vector_degree());
  for (const auto& [hkey, hval] : h.coeffs()) {
    int i = hkey.form[0], t = hkey.vec[0];
    for (const auto& [akey, aval] : a.coeffs()) {
      int pos = index_position(akey.form, i);
      if (pos == 0) continue;
      Index replaced = akey.form;
      replaced[pos - 1] = t;
      int sg = 0;
      Index sorted = replaced;
      if (!sort_with_sign(sorted, sg)) continue;
      S term = hval * aval;
      if (sg < 0) term = -term;
      out.add({sorted, akey.vec}, term);
    }
  }
  return out;
}

// --- grid-mode traces -------------------------------------------------------

struct GridTrace {
  Face face;
  GridField tt, nt, tn, nn;
};

GridTrace face_projections_grid(const GridField& psi, const Face& face);

struct GridFirstOrderTraces {
  Face face;
  GridField T, Tstar, F, Fstar;
};

GridFirstOrderTraces first_order_boundary_grid(const GridField& psi, const Face& face);

// <Op psi, eta> - <psi, Op* eta> - (boundary pairing), trapezoid quadrature.
// Decays at O(h^2) under grid refinement for smooth fields.
enum class DualityPair { H, F };
double greens_residual(const GridField& psi, const GridField& eta, DualityPair which);

}  // namespace dfc
