/* tslint:disable */
/* eslint-disable */

/**
 * Residual history: initial residual, then one value per iteration.
 */
export function mgrit_convergence(problem: string, nt: number, factors: Uint32Array, fcf: boolean): Float64Array;

export function pwm_average(period: number, teeth: number, window_teeth: number, t_end: number, samples: number): Float64Array;

export function pwm_signal(period: number, teeth: number, t_end: number, samples: number): Float64Array;

/**
 * Flattened `[workers, speedup, workers, speedup, ...]` pairs.
 */
export function speedup_curve(problem: string, nt: number, factors: Uint32Array, fcf: boolean, max_workers: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly mgrit_convergence: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly pwm_average: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly pwm_signal: (a: number, b: number, c: number, d: number) => [number, number];
    readonly speedup_curve: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
