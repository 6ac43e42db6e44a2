# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled trajectory stepping kernel.

Mirrors _jump_kernel_py.run_steps expression-for-expression; see that
module for the contract. Built with -ffp-contract=off so results are
bitwise-identical to the pure-Python path.
"""

from libc.math cimport sqrt


cdef enum:
    STATUS_OK = 0
    STATUS_EVENT_OVERFLOW = 1
    STATUS_ESCAPE_HIGH = 2
    STATUS_ESCAPE_LOW = 3
    EV_DOWN = 0
    EV_UP = 1
    EV_LOSS = 2


def run_steps(double gr, double gi, double er, double ei, Py_ssize_t e_off,
              const double[::1] gamma_up, const double[::1] gamma_down,
              const double[::1] expected_e,
              double lam, double gamma_loss, double dt,
              Py_ssize_t n_steps, Py_ssize_t sample_stride, Py_ssize_t max_events,
              const double[::1] uniforms,
              double complex[::1] samp_cg, double complex[::1] samp_ce,
              long long[::1] samp_e,
              long long[::1] ev_step, signed char[::1] ev_kind,
              long long[::1] ev_e_after):
    cdef Py_ssize_t size = gamma_up.shape[0]
    cdef Py_ssize_t cap = ev_step.shape[0]
    cdef Py_ssize_t n_ev = 0, n_samp = 0, suppressed = 0, steps_done = 0, i = 0
    cdef int status = STATUS_OK
    cdef double g_up, g_dn, pg, pe, p_down, p_up, p_loss, u
    cdef double a, b, ngr, ngi, ner, nei, inv
    cdef double complex zg, ze

    with nogil:
        while i < n_steps:
            if i % sample_stride == 0:
                zg.real = gr
                zg.imag = gi
                ze.real = er
                ze.imag = ei
                samp_cg[n_samp] = zg
                samp_ce[n_samp] = ze
                samp_e[n_samp] = e_off
                n_samp += 1

            g_up = gamma_up[e_off]
            g_dn = gamma_down[e_off]
            pg = gr * gr + gi * gi
            pe = er * er + ei * ei
            p_down = g_dn * pe * dt
            p_up = g_up * pg * dt
            if gamma_loss > 0.0:
                p_loss = gamma_loss * expected_e[e_off] * dt
            else:
                p_loss = 0.0
            u = uniforms[i]

            if e_off == 0 and p_loss > 0.0:
                if p_down + p_up <= u and u < p_down + p_up + p_loss:
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
        zg.real = gr
        zg.imag = gi
        ze.real = er
        ze.imag = ei
        samp_cg[n_samp] = zg
        samp_ce[n_samp] = ze
        samp_e[n_samp] = e_off
        n_samp += 1

    return status, steps_done, n_ev, n_samp, suppressed, gr, gi, er, ei, e_off
