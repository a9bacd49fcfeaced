#pragma once

// Standard normal density/CDF evaluated so that extreme arguments stay finite.
// Everything downstream (belief updates, price likelihoods) goes through these.
namespace bayesclear::normal {

double pdf(double z);
double log_pdf(double z);
double cdf(double z);
double log_cdf(double z);

// Inverse Mills ratio pdf(z) / cdf(z). Uses a continued fraction below z = -8.
double inverse_mills(double z);

// lambda(z) * (z + lambda(z)), i.e. -d^2/dz^2 log cdf(z). Always in [0, 1].
double inverse_mills_curvature(double z);

}  // namespace bayesclear::normal
