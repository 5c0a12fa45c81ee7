/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_convergence_free: (a: number, b: number) => void;
export const __wbg_responsecurve_free: (a: number, b: number) => void;
export const __wbg_smoothingcurve_free: (a: number, b: number) => void;
export const convergence_bound: (a: number) => [number, number];
export const convergence_classical: (a: number) => [number, number];
export const convergence_degree: (a: number) => number;
export const convergence_kappa: (a: number) => number;
export const convergence_qgfa: (a: number) => [number, number];
export const convergence_t: (a: number) => [number, number];
export const flowConvergence: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const responseCurve: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const responsecurve_degree: (a: number) => number;
export const responsecurve_max_abs_error: (a: number) => number;
export const responsecurve_residual: (a: number) => number;
export const responsecurve_response: (a: number) => [number, number];
export const responsecurve_safety: (a: number) => number;
export const responsecurve_sup_error: (a: number) => number;
export const responsecurve_target: (a: number) => [number, number];
export const responsecurve_x: (a: number) => [number, number];
export const smoothingCurve: (a: number, b: number, c: number, d: number) => [number, number, number];
export const smoothingcurve_abs: (a: number) => [number, number];
export const smoothingcurve_epsilon: (a: number) => number;
export const smoothingcurve_epsilon_g1: (a: number) => number;
export const smoothingcurve_epsilon_g2: (a: number) => number;
export const smoothingcurve_smooth: (a: number) => [number, number];
export const smoothingcurve_x: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
