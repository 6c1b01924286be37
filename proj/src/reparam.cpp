#include "gmix/reparam.hpp"

#include <string>

namespace gmix {

MclustConstraint parse_mclust_constraint(std::string_view s) {
  if (s == "EII") return MclustConstraint::EII;
  if (s == "VII") return MclustConstraint::VII;
  if (s == "EEI") return MclustConstraint::EEI;
  if (s == "VVI") return MclustConstraint::VVI;
  if (s == "EEE") return MclustConstraint::EEE;
  if (s == "VVV") return MclustConstraint::VVV;
  throw ConfigError("unknown mclust constraint: " + std::string(s) +
                    " (supported: EII VII EEI VVI EEE VVV)");
}

const char* to_string(MclustConstraint c) {
  switch (c) {
    case MclustConstraint::EII: return "EII";
    case MclustConstraint::VII: return "VII";
    case MclustConstraint::EEI: return "EEI";
    case MclustConstraint::VVI: return "VVI";
    case MclustConstraint::EEE: return "EEE";
    case MclustConstraint::VVV: return "VVV";
  }
  return "?";
}

namespace {

bool mclust_variable_volume(MclustConstraint c) {
  return c == MclustConstraint::VII || c == MclustConstraint::VVI ||
         c == MclustConstraint::VVV;
}

// 0 = unit shape (spherical), 1 = one shared vector, 2 = per component
int mclust_shape_mode(MclustConstraint c) {
  switch (c) {
    case MclustConstraint::EII:
    case MclustConstraint::VII: return 0;
    case MclustConstraint::EEI:
    case MclustConstraint::EEE: return 1;
    case MclustConstraint::VVI:
    case MclustConstraint::VVV: return 2;
  }
  return 0;
}

// 0 = axis aligned, 1 = one shared rotation, 2 = per component
int mclust_orient_mode(MclustConstraint c) {
  switch (c) {
    case MclustConstraint::EEE: return 1;
    case MclustConstraint::VVV: return 2;
    default: return 0;
  }
}

}  // namespace

MclustLayout mclust_layout(MclustConstraint c, int K, int p) {
  if (K < 1 || p < 1) {
    throw InvalidInput("mclust_layout: K and p must be >= 1");
  }
  const std::size_t kk = static_cast<std::size_t>(K);
  const std::size_t pp = static_cast<std::size_t>(p);
  MclustLayout lay;
  lay.volume_len = mclust_variable_volume(c) ? kk : 1;
  switch (mclust_shape_mode(c)) {
    case 1: lay.shape_len = pp; break;
    case 2: lay.shape_len = kk * pp; break;
    default: break;
  }
  const std::size_t m = strict_tri_size(pp);
  switch (mclust_orient_mode(c)) {
    case 1: lay.orient_len = m; break;
    case 2: lay.orient_len = kk * m; break;
    default: break;
  }
  return lay;
}

std::size_t mclust_cov_param_count(MclustConstraint c, int K, int p) {
  const MclustLayout lay = mclust_layout(c, K, p);
  return lay.volume_len + lay.shape_len + lay.orient_len -
         mclust_gauge_dim(c, K);
}

std::size_t mclust_gauge_dim(MclustConstraint c, int K) {
  switch (mclust_shape_mode(c)) {
    case 1: return 1;
    case 2: return static_cast<std::size_t>(K);
    default: return 0;
  }
}

PgmmFamily parse_pgmm_family(std::string_view s) {
  if (s == "CCC") return PgmmFamily::CCC;
  if (s == "CCU") return PgmmFamily::CCU;
  if (s == "CUC") return PgmmFamily::CUC;
  if (s == "CUU") return PgmmFamily::CUU;
  if (s == "UCC") return PgmmFamily::UCC;
  if (s == "UCU") return PgmmFamily::UCU;
  if (s == "UUC") return PgmmFamily::UUC;
  if (s == "UUU") return PgmmFamily::UUU;
  throw ConfigError("unknown pgmm family: " + std::string(s) +
                    " (supported: CCC CCU CUC CUU UCC UCU UUC UUU)");
}

const char* to_string(PgmmFamily f) {
  switch (f) {
    case PgmmFamily::CCC: return "CCC";
    case PgmmFamily::CCU: return "CCU";
    case PgmmFamily::CUC: return "CUC";
    case PgmmFamily::CUU: return "CUU";
    case PgmmFamily::UCC: return "UCC";
    case PgmmFamily::UCU: return "UCU";
    case PgmmFamily::UUC: return "UUC";
    case PgmmFamily::UUU: return "UUU";
  }
  return "?";
}

bool pgmm_tied_loadings(PgmmFamily f) {
  return f == PgmmFamily::CCC || f == PgmmFamily::CCU ||
         f == PgmmFamily::CUC || f == PgmmFamily::CUU;
}

bool pgmm_tied_noise(PgmmFamily f) {
  return f == PgmmFamily::CCC || f == PgmmFamily::CCU ||
         f == PgmmFamily::UCC || f == PgmmFamily::UCU;
}

bool pgmm_isotropic_noise(PgmmFamily f) {
  return f == PgmmFamily::CCC || f == PgmmFamily::CUC ||
         f == PgmmFamily::UCC || f == PgmmFamily::UUC;
}

PgmmLayout pgmm_layout(PgmmFamily f, int K, int p, int q) {
  if (K < 1 || p < 1) {
    throw InvalidInput("pgmm_layout: K and p must be >= 1");
  }
  if (q < 1 || q >= p) {
    throw ConfigError("pgmm: latent dimension must satisfy 1 <= q < p");
  }
  const std::size_t kk = static_cast<std::size_t>(K);
  const std::size_t pp = static_cast<std::size_t>(p);
  const std::size_t qq = static_cast<std::size_t>(q);
  PgmmLayout lay;
  lay.loadings_len = (pgmm_tied_loadings(f) ? 1 : kk) * pp * qq;
  lay.noise_len = (pgmm_tied_noise(f) ? 1 : kk) *
                  (pgmm_isotropic_noise(f) ? 1 : pp);
  return lay;
}

std::size_t pgmm_cov_param_count(PgmmFamily f, int K, int p, int q) {
  const PgmmLayout lay = pgmm_layout(f, K, p, q);
  return lay.loadings_len - pgmm_gauge_dim(f, K, q) + lay.noise_len;
}

std::size_t pgmm_gauge_dim(PgmmFamily f, int K, int q) {
  const std::size_t rot = strict_tri_size(static_cast<std::size_t>(q));
  return (pgmm_tied_loadings(f) ? 1 : static_cast<std::size_t>(K)) * rot;
}

}  // namespace gmix
