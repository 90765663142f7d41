"""Sample-by-sample stepping of the wave-based network.

Every duct is a pair of ring buffers (forward wave ``f`` and backward wave
``g``).  All ring buffers share one global sample counter ``k`` and slot
``k % D``: the value read at step ``k`` is the one written ``D`` steps before,
and the new departing wave is written into the same slot.

Junction codes
--------------
0  plain: ``P_b = r P_a``, ``U_b = a U_a``
1  loudspeaker: ``P_b = P_a``, ``U_a = U_b + u_ls``
2  area jump (L-zeta): compact orifice with inertia and loss
3  flame: ``P_b = r P_a``, ``U_b = U_a + E q`` with q the delayed low-passed
   saturated upstream velocity

Parameter rows ``jpar[j]``:
    plain      (r, a)
    speaker    ()
    area jump  (alpha_u, alpha_d, resistance, inertia * fs)
    flame      (r, E, saturation, K_bilinear)
State rows ``jst[j]``:
    area jump  (u_neck, F_prev)
    flame      (x_prev, y_prev)
"""

import math

import numpy as np

from .._jit import njit

PLAIN, SPEAKER, AREA_JUMP, FLAME = 0, 1, 2, 3


@njit(cache=True)
def run_network(delays, offsets, fbuf, gbuf, jtype, jpar, jst,
                ftf_buf, ctl_buf, ctl_delay, gain, ls_gain, clip,
                bpar, bst, probe_duct, k0, n_steps, forcing,
                out_p, out_v, linear):
    """Advance the network ``n_steps`` samples in place.

    Parameters
    ----------
    bpar : (r_in, b_in, r_out, b_out)
        Boundary reflections ``R(z) = r (1 - b) / (1 - b z^-1)``.
    bst : 2-element array
        Previous reflected wave at the inlet and outlet.
    forcing : 1-D array
        Velocity source added to the upstream boundary each step; pass an
        empty array for none.
    out_p, out_v : 1-D arrays of length ``n_steps`` or empty
        Receive the probe pressure ``p'/(rho c)`` and actuator voltage.
    linear : bool
        Replace tanh saturation and voltage clipping by the identity.

    Returns
    -------
    k : int
        Sample counter after the last step.
    """
    nd = delays.shape[0]
    fa = np.empty(nd)
    gb = np.empty(nd)
    fdep = np.empty(nd)
    gdep = np.empty(nd)
    n_force = forcing.shape[0]
    n_ftf = ftf_buf.shape[0]
    record = out_p.shape[0] > 0
    k = k0
    for step in range(n_steps):
        for i in range(nd):
            slot = offsets[i] + k % delays[i]
            fa[i] = fbuf[slot]
            gb[i] = gbuf[slot]

        speaker = -1
        for j in range(nd - 1):
            t = jtype[j]
            f_in = fa[j]
            g_in = gb[j + 1]
            if t == PLAIN:
                r = jpar[j, 0]
                a = jpar[j, 1]
                g_out = (2.0 * g_in - (r - a) * f_in) / (r + a)
                gdep[j] = g_out
                fdep[j + 1] = r * (f_in + g_out) - g_in
            elif t == AREA_JUMP:
                au = jpar[j, 0]
                ad = jpar[j, 1]
                res = jpar[j, 2]
                mfs = jpar[j, 3]
                drive = f_in - g_in
                if mfs > 0.0:
                    un = (jst[j, 0] * (mfs - 0.5 * res) + drive + jst[j, 1]) / (mfs + 0.5 * res)
                else:
                    un = 2.0 * drive / res
                jst[j, 0] = un
                jst[j, 1] = drive
                gdep[j] = f_in - au * un
                fdep[j + 1] = g_in + ad * un
            elif t == FLAME:
                r = jpar[j, 0]
                e = jpar[j, 1]
                sat = jpar[j, 2]
                kb = jpar[j, 3]
                slot_f = k % n_ftf
                q = ftf_buf[slot_f]
                g_out = (2.0 * g_in - (r - 1.0) * f_in + e * q) / (r + 1.0)
                gdep[j] = g_out
                fdep[j + 1] = r * (f_in + g_out) - g_in
                u_up = f_in - g_out
                if linear:
                    x = u_up
                else:
                    x = sat * math.tanh(u_up / sat)
                y = (x + jst[j, 0] - (1.0 - kb) * jst[j, 1]) / (1.0 + kb)
                jst[j, 0] = x
                jst[j, 1] = y
                ftf_buf[slot_f] = y
            else:
                speaker = j

        p_probe = fdep[probe_duct] + gb[probe_duct]
        if ctl_delay > 0:
            slot_c = k % ctl_delay
            p_delayed = ctl_buf[slot_c]
            ctl_buf[slot_c] = p_probe
        else:
            p_delayed = p_probe
        v = gain * p_delayed
        if not linear:
            if v > clip:
                v = clip
            elif v < -clip:
                v = -clip
        u_ls = ls_gain * v
        if speaker >= 0:
            gdep[speaker] = gb[speaker + 1] - 0.5 * u_ls
            fdep[speaker + 1] = fa[speaker] - 0.5 * u_ls

        refl = bpar[1] * bst[0] + bpar[0] * (1.0 - bpar[1]) * gb[0]
        bst[0] = refl
        fdep[0] = refl
        if n_force > 0:
            fdep[0] += forcing[step % n_force]
        refl = bpar[3] * bst[1] + bpar[2] * (1.0 - bpar[3]) * fa[nd - 1]
        bst[1] = refl
        gdep[nd - 1] = refl

        for i in range(nd):
            slot = offsets[i] + k % delays[i]
            fbuf[slot] = fdep[i]
            gbuf[slot] = gdep[i]
        if record:
            out_p[step] = p_probe
            out_v[step] = v
        k += 1
    return k
