/* tslint:disable */
/* eslint-disable */

/**
 * Free decay of w₀ = a·sin x over a fluid at rest on a periodic nx × nx/2 grid.
 */
export class Simulation {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Advances `steps` time steps.
     */
    advance(steps: number): void;
    /**
     * Plate displacement at the nx plate nodes.
     */
    displacement(): Float64Array;
    /**
     * kinetic, internal, plate_kinetic, bending, viscous and plate dissipation so far, total.
     */
    energy(): Float64Array;
    constructor(nx: number, alpha: number, gamma: number, amplitude: number, dt: number);
    time(): number;
}

/**
 * f(x, y) at `n` points x ∈ [0, x_max], followed by the scanned constants
 * c_near, c_far and c for the band y ∈ [0.5, 2].
 */
export function potential_curve(y: number, gamma: number, x_max: number, n: number): Float64Array;

/**
 * Supremum of the admissible s for (γ, d, α > 0).
 */
export function threshold(gamma: number, d: number, alpha_positive: boolean): number;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_simulation_free: (a: number, b: number) => void;
    readonly potential_curve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly simulation_advance: (a: number, b: number) => [number, number];
    readonly simulation_displacement: (a: number) => [number, number];
    readonly simulation_energy: (a: number) => [number, number, number, number];
    readonly simulation_new: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly simulation_time: (a: number) => number;
    readonly threshold: (a: number, b: number, c: number) => [number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
