"""Training losses: per-domain adversarial autoencoder terms, the latent
consensus glue, and the contrastive NT-Xent loss, each with exact analytic
gradients (validated against central finite differences in the test suite).

The autoencoder loss has three pieces per domain:
  * reconstruction: mean squared distance between input and its decode,
  * a discriminator piece (updates the discriminator only) pushing apart
    prior samples and encoded samples,
  * an encoder piece (updates the encoder only) pulling encodings toward
    the discriminator's notion of the prior.
"""

from __future__ import annotations

import numpy as np

from .mlp import MLPParams, add_scaled, mlp_backward, mlp_forward_cached, zeros_like_params

SIGMA_EPS = 1e-7


def sigmoid(u: np.ndarray) -> np.ndarray:
    out = np.empty_like(u, dtype=np.float64)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    eu = np.exp(u[~pos])
    out[~pos] = eu / (1.0 + eu)
    return out


def _log_sigma(u):
    """log of the clamped sigmoid and its derivative in u."""
    s = sigmoid(u)
    sc = np.clip(s, SIGMA_EPS, 1.0 - SIGMA_EPS)
    grad = np.where(s == sc, 1.0 - s, 0.0)
    return np.log(sc), grad


def _log_one_minus_sigma(u):
    """log(1 - clamped sigmoid) and its derivative in u."""
    s = sigmoid(u)
    sc = np.clip(s, SIGMA_EPS, 1.0 - SIGMA_EPS)
    grad = np.where(s == sc, -s, 0.0)
    return np.log(1.0 - sc), grad


# ---------------------------------------------------------------------------
# autoencoder terms (one domain at a time)
# ---------------------------------------------------------------------------


def reconstruction_grads(enc: MLPParams, dec: MLPParams, batch: np.ndarray):
    """Mean squared reconstruction error and gradients for encoder+decoder."""
    z, cache_e = mlp_forward_cached(enc, batch)
    out, cache_d = mlp_forward_cached(dec, z)
    resid = out - batch
    n = batch.shape[0]
    loss = float(np.sum(resid * resid) / n)
    d_out = 2.0 * resid / n
    g_dec, dz = mlp_backward(dec, cache_d, d_out)
    g_enc, _ = mlp_backward(enc, cache_e, dz)
    return loss, g_enc, g_dec


def discriminator_grads(
    enc: MLPParams, disc: MLPParams, batch: np.ndarray, prior: np.ndarray, beta: float
):
    """Discriminator partition: -(beta/2) * mean[log s(D(z_prior)) + log(1 - s(D(enc(x))))].

    Gradients flow into the discriminator only; the encoder is treated as a
    fixed sampler here.
    """
    n = batch.shape[0]
    if prior.shape[0] != n:
        raise ValueError("prior sample count must match the batch size")
    z_enc, _ = mlp_forward_cached(enc, batch)
    u_p, cache_p = mlp_forward_cached(disc, prior)
    u_e, cache_e = mlp_forward_cached(disc, z_enc)
    log_p, dlog_p = _log_sigma(u_p)
    log_e, dlog_e = _log_one_minus_sigma(u_e)
    loss = float(-(beta / 2.0) * np.mean(log_p + log_e))
    scale = -(beta / 2.0) / n
    g_p, _ = mlp_backward(disc, cache_p, scale * dlog_p)
    g_e, _ = mlp_backward(disc, cache_e, scale * dlog_e)
    add_scaled(g_p, g_e, 1.0)
    return loss, g_p


def encoder_adversarial_grads(enc: MLPParams, disc: MLPParams, batch: np.ndarray, beta: float):
    """Encoder partition: -beta * mean[log s(D(enc(x)))]; updates the encoder only."""
    n = batch.shape[0]
    z, cache_z = mlp_forward_cached(enc, batch)
    u, cache_u = mlp_forward_cached(disc, z)
    log_e, dlog = _log_sigma(u)
    loss = float(-beta * np.mean(log_e))
    _, dz = mlp_backward(disc, cache_u, (-beta / n) * dlog)  # disc grads discarded
    g_enc, _ = mlp_backward(enc, cache_z, dz)
    return loss, g_enc


def wae_loss(nets, domain: str, batch: np.ndarray, prior: np.ndarray, beta: float):
    """Loss values for one domain: (reconstruction, (discriminator, encoder_adv)).

    domain is "x" (skeleton features) or "q" (joint configurations).
    """
    enc, dec, disc = _domain_nets(nets, domain)
    recon, _, _ = reconstruction_grads(enc, dec, batch)
    disc_term, _ = discriminator_grads(enc, disc, batch, prior, beta)
    adv_term, _ = encoder_adversarial_grads(enc, disc, batch, beta)
    return recon, (disc_term, adv_term)


def _domain_nets(nets, domain: str):
    if domain == "x":
        return nets.enc_x, nets.dec_x, nets.disc_x
    if domain == "q":
        return nets.enc_q, nets.dec_q, nets.disc_q
    raise ValueError(f"unknown domain {domain!r}, expected 'x' or 'q'")


# ---------------------------------------------------------------------------
# latent consensus (glue) loss
# ---------------------------------------------------------------------------


def consensus_grads(enc_x: MLPParams, enc_q: MLPParams, x_batch: np.ndarray, q_batch: np.ndarray):
    """Mean ||enc_x(x) - enc_q(q)||^2 over paired rows, with both encoder grads."""
    if x_batch.shape[0] != q_batch.shape[0]:
        raise ValueError("consensus batch sides must have equal length")
    zx, cache_x = mlp_forward_cached(enc_x, x_batch)
    zq, cache_q = mlp_forward_cached(enc_q, q_batch)
    diff = zx - zq
    n = x_batch.shape[0]
    loss = float(np.sum(diff * diff) / n)
    dzx = 2.0 * diff / n
    g_x, _ = mlp_backward(enc_x, cache_x, dzx)
    g_q, _ = mlp_backward(enc_q, cache_q, -dzx)
    return loss, g_x, g_q


def consensus_loss(nets, x_batch: np.ndarray, q_batch: np.ndarray) -> float:
    loss, _, _ = consensus_grads(nets.enc_x, nets.enc_q, x_batch, q_batch)
    return loss


# ---------------------------------------------------------------------------
# NT-Xent contrastive loss
# ---------------------------------------------------------------------------


def ntxent_loss_grads_z(Z: np.ndarray, tau: float):
    """NT-Xent over 2N ordered latents paired as (0,1), (2,3), ...

    l(i,j) = -log( exp(cos(z_i,z_j)/tau) / sum_{m != i} exp(cos(z_i,z_m)/tau) );
    the total averages l over all 2N ordered anchor/positive assignments.
    The denominator includes the positive term, and cosine makes the loss
    invariant to rescaling all latents. Returns (loss, dloss/dZ).
    """
    Z = np.asarray(Z, dtype=np.float64)
    n2 = Z.shape[0]
    if n2 < 4 or n2 % 2 != 0:
        raise ValueError("NT-Xent needs an even number of latents, at least 4")
    norms = np.linalg.norm(Z, axis=1)
    if np.any(norms < 1e-12):
        raise ValueError("zero-norm latent vector: cosine similarity undefined")
    Zh = Z / norms[:, None]
    C = Zh @ Zh.T
    A = C / tau
    np.fill_diagonal(A, -np.inf)  # exclude m == i from every denominator
    row_max = A.max(axis=1, keepdims=True)
    expA = np.exp(A - row_max)
    denom = expA.sum(axis=1, keepdims=True)
    log_denom = np.log(denom) + row_max

    partner = np.arange(n2) ^ 1  # (0,1),(2,3),... swapped in pairs
    pos = A[np.arange(n2), partner]
    losses = -pos + log_denom[:, 0]
    loss = float(losses.mean())

    # dL/dA = (P - onehot(partner)) / 2N on off-diagonal entries
    P = expA / denom
    G = P.copy()
    G[np.arange(n2), partner] -= 1.0
    G /= n2
    np.fill_diagonal(G, 0.0)
    G /= tau  # back through A = C / tau
    dZh = (G + G.T) @ Zh
    # through the normalization z -> z/||z||
    proj = np.sum(dZh * Zh, axis=1, keepdims=True)
    dZ = (dZh - proj * Zh) / norms[:, None]
    return loss, dZ


def ntxent_loss(latents: np.ndarray, tau: float) -> float:
    """NT-Xent value for 2N ordered latent vectors (pairs are adjacent rows)."""
    loss, _ = ntxent_loss_grads_z(latents, tau)
    return loss


def ntxent_encoder_grads(enc: MLPParams, inputs: np.ndarray, tau: float):
    """NT-Xent through a single encoder: inputs (2N, d) -> (loss, encoder grads)."""
    Z, cache = mlp_forward_cached(enc, inputs)
    loss, dZ = ntxent_loss_grads_z(Z, tau)
    g, _ = mlp_backward(enc, cache, dZ)
    return loss, g
