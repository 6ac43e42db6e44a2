"""Pure-Python trajectory stepping kernel.

Reference implementation of the hot loop; the Cython extension
(_jump_kernel.pyx) mirrors it expression-for-expression (and is compiled
with FMA contraction disabled) so both backends produce bitwise-identical
trajectories from the same uniform stream.

Contract
--------
One uniform variate is consumed per step. Per step, with offsets into the
rate arrays (offset 0 = grid floor):

  p_down = gamma_down[e] * |c_e|^2 * dt     (emission; e -> e+1, psi -> s-psi/|..|)
  p_up   = gamma_up[e]   * |c_g|^2 * dt     (absorption; e -> e-1, psi -> s+psi/|..|)
  p_loss = gamma_loss * expected_e[e] * dt  (e -> e-1, psi unchanged; forced to 0
                                             at the grid floor, occurrences counted)

u < p_down fires down, < p_down+p_up fires up, < p_down+p_up+p_loss fires
loss, otherwise one Euler drift step of the normalized nonlinear no-jump
evolution. At most one event fires per step.

Samples of (c_g, c_e, e) are recorded every `sample_stride` steps starting
at step 0; the state after the final step is recorded too when n_steps is
a multiple of the stride. Early exit after `max_events` events (0 = run to
n_steps).

Returns (status, steps_done, n_events, n_samples, floor_suppressed,
gr, gi, er, ei, e_off). status: 0 ok, 1 event-capacity overflow,
2 escaped above the grid, 3 escaped below (steps_done then points at the
offending step).
"""

from math import sqrt

STATUS_OK = 0
STATUS_EVENT_OVERFLOW = 1
STATUS_ESCAPE_HIGH = 2
STATUS_ESCAPE_LOW = 3

EV_DOWN = 0
EV_UP = 1
EV_LOSS = 2


def run_steps(gr, gi, er, ei, e_off,
              gamma_up, gamma_down, expected_e,
              lam, gamma_loss, dt, n_steps, sample_stride, max_events,
              uniforms,
              samp_cg, samp_ce, samp_e,
              ev_step, ev_kind, ev_e_after):
    size = gamma_up.shape[0]
    cap = ev_step.shape[0]
    n_ev = 0
    n_samp = 0
    suppressed = 0
    status = STATUS_OK
    steps_done = 0

    i = 0
    while i < n_steps:
        if i % sample_stride == 0:
            samp_cg[n_samp] = complex(gr, gi)
            samp_ce[n_samp] = complex(er, ei)
            samp_e[n_samp] = e_off
            n_samp += 1

        g_up = gamma_up[e_off]
        g_dn = gamma_down[e_off]
        pg = gr * gr + gi * gi
        pe = er * er + ei * ei
        p_down = g_dn * pe * dt
        p_up = g_up * pg * dt
        p_loss = gamma_loss * expected_e[e_off] * dt if gamma_loss > 0.0 else 0.0
        u = uniforms[i]

        if e_off == 0 and p_loss > 0.0:
            if p_down + p_up <= u < p_down + p_up + p_loss:
                suppressed += 1
            p_loss = 0.0

        if u < p_down:
            if e_off + 1 >= size:
                status = STATUS_ESCAPE_HIGH
                steps_done = i
                break
            inv = 1.0 / sqrt(pe)
            gr = er * inv
            gi = ei * inv
            er = 0.0
            ei = 0.0
            e_off += 1
            if n_ev >= cap:
                status = STATUS_EVENT_OVERFLOW
                steps_done = i
                break
            ev_step[n_ev] = i
            ev_kind[n_ev] = EV_DOWN
            ev_e_after[n_ev] = e_off
            n_ev += 1
        elif u < p_down + p_up:
            if e_off - 1 < 0:
                status = STATUS_ESCAPE_LOW
                steps_done = i
                break
            inv = 1.0 / sqrt(pg)
            er = gr * inv
            ei = gi * inv
            gr = 0.0
            gi = 0.0
            e_off -= 1
            if n_ev >= cap:
                status = STATUS_EVENT_OVERFLOW
                steps_done = i
                break
            ev_step[n_ev] = i
            ev_kind[n_ev] = EV_UP
            ev_e_after[n_ev] = e_off
            n_ev += 1
        elif u < p_down + p_up + p_loss:
            if e_off - 1 < 0:
                status = STATUS_ESCAPE_LOW
                steps_done = i
                break
            e_off -= 1
            if n_ev >= cap:
                status = STATUS_EVENT_OVERFLOW
                steps_done = i
                break
            ev_step[n_ev] = i
            ev_kind[n_ev] = EV_LOSS
            ev_e_after[n_ev] = e_off
            n_ev += 1
        else:
            a = 0.5 * (g_dn * pe - g_up * (1.0 - pg))
            b = 0.5 * (g_up * pg - g_dn * (1.0 - pe))
            ngr = gr + dt * (lam * ei + a * gr)
            ngi = gi + dt * (-lam * er + a * gi)
            ner = er + dt * (lam * gi + b * er)
            nei = ei + dt * (-lam * gr + b * ei)
            inv = 1.0 / sqrt(ngr * ngr + ngi * ngi + ner * ner + nei * nei)
            gr = ngr * inv
            gi = ngi * inv
            er = ner * inv
            ei = nei * inv

        i += 1
        steps_done = i
        if max_events > 0 and n_ev >= max_events:
            break

    if status == STATUS_OK and steps_done == n_steps and n_steps % sample_stride == 0:
        samp_cg[n_samp] = complex(gr, gi)
        samp_ce[n_samp] = complex(er, ei)
        samp_e[n_samp] = e_off
        n_samp += 1

    return status, steps_done, n_ev, n_samp, suppressed, gr, gi, er, ei, e_off
