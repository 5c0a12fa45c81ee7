/* tslint:disable */
/* eslint-disable */

export class Convergence {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * `e^{-t/κ}‖δ(0)‖/‖u*‖`.
     */
    readonly bound: Float64Array;
    /**
     * Relative error of the exact flow.
     */
    readonly classical: Float64Array;
    readonly degree: number;
    readonly kappa: number;
    /**
     * Relative error of the polynomial solver at the chosen degree.
     */
    readonly qgfa: Float64Array;
    readonly t: Float64Array;
}

export class ResponseCurve {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly degree: number;
    readonly max_abs_error: number;
    readonly residual: number;
    readonly response: Float64Array;
    readonly safety: number;
    readonly sup_error: number;
    readonly target: Float64Array;
    readonly x: Float64Array;
}

export class SmoothingCurve {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly abs: Float64Array;
    readonly epsilon: number;
    readonly epsilon_g1: number;
    readonly epsilon_g2: number;
    readonly smooth: Float64Array;
    readonly x: Float64Array;
}

export function flowConvergence(problem: string, degree: number, t_max: number, steps: number): Convergence;

export function responseCurve(target: string, kappa: number, t: number, degree: number, n: number): ResponseCurve;

export function smoothingCurve(kappa: number, t: number, eta: number, n: number): SmoothingCurve;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_convergence_free: (a: number, b: number) => void;
    readonly __wbg_responsecurve_free: (a: number, b: number) => void;
    readonly __wbg_smoothingcurve_free: (a: number, b: number) => void;
    readonly convergence_bound: (a: number) => [number, number];
    readonly convergence_classical: (a: number) => [number, number];
    readonly convergence_degree: (a: number) => number;
    readonly convergence_kappa: (a: number) => number;
    readonly convergence_qgfa: (a: number) => [number, number];
    readonly convergence_t: (a: number) => [number, number];
    readonly flowConvergence: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly responseCurve: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly responsecurve_degree: (a: number) => number;
    readonly responsecurve_max_abs_error: (a: number) => number;
    readonly responsecurve_residual: (a: number) => number;
    readonly responsecurve_response: (a: number) => [number, number];
    readonly responsecurve_safety: (a: number) => number;
    readonly responsecurve_sup_error: (a: number) => number;
    readonly responsecurve_target: (a: number) => [number, number];
    readonly responsecurve_x: (a: number) => [number, number];
    readonly smoothingCurve: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly smoothingcurve_abs: (a: number) => [number, number];
    readonly smoothingcurve_epsilon: (a: number) => number;
    readonly smoothingcurve_epsilon_g1: (a: number) => number;
    readonly smoothingcurve_epsilon_g2: (a: number) => number;
    readonly smoothingcurve_smooth: (a: number) => [number, number];
    readonly smoothingcurve_x: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
