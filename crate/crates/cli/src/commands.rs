// SPDX-License-Identifier: Apache-2.0

use std::fs::File;
use std::process::ExitCode;

use anyhow::Context;
use cesa::adder::true_carry;
use cesa::apps::image::{add_noise, test_image};
use cesa::apps::kmeans::{bundled_dataset, kmeans, parse_csv};
use cesa::apps::quality::{psnr, ssim, QualityReport};
use cesa::apps::smooth::{
    check_accumulator, convolve_approx, convolve_reference, gaussian_kernel_int,
    DEFAULT_KERNEL_SIZE,
};
use cesa::apps::pgm;
use cesa::cost::{self, delay_reduction_vs_ripple};
use cesa::sweep::{run_sweep, SweepSpec};
use cesa::verify::verify_width;
use cesa::{
    add_approx, add_exact, error_distance, estimate_block_carry, relative_error_distance,
    AdderConfig, Exec, Mode, Variant, Word,
};
use serde::Serialize;

use crate::output::{config_tag, format_for, output_dir, write_json, write_sweep};
use crate::{Command, ModeArg};

pub fn run(cmd: Command) -> anyhow::Result<ExitCode> {
    match cmd {
        Command::Add { adder, a, b, json } => add(&adder.config()?, a, b, json),
        Command::Sweep {
            widths,
            blocks,
            variants,
            mode,
            samples,
            runs,
            seed,
            exhaustive_cap,
            output,
            format,
        } => {
            let spec = SweepSpec {
                widths,
                block_sizes: blocks,
                variants,
                mode: match mode {
                    ModeArg::Exhaustive => Mode::Exhaustive,
                    ModeArg::MonteCarlo => Mode::MonteCarlo,
                },
                samples,
                runs,
                seed,
                exhaustive_cap,
            };
            let out = run_sweep(&spec, Exec::default())?;
            for s in &out.skipped {
                eprintln!(
                    "skipped {}:{}:{}: {}",
                    s.width, s.block_size, s.variant, s.reason
                );
            }
            let path = output.as_deref();
            write_sweep(&out, format_for(path, format), path)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { width, json } => verify(width, json),
        Command::Cost { adder, json } => {
            let config = adder.config()?;
            let c = cost::estimate(&config);
            let reduction = delay_reduction_vs_ripple(&config);
            if json {
                #[derive(Serialize)]
                struct CostRecord {
                    #[serde(flatten)]
                    cost: cost::CostEstimate,
                    delay_reduction_vs_ripple: f64,
                }
                println!(
                    "{}",
                    serde_json::to_string_pretty(&CostRecord {
                        cost: c,
                        delay_reduction_vs_ripple: reduction,
                    })?
                );
            } else {
                println!("config            {config}");
                println!("critical path     {} levels", c.critical_path_levels);
                println!("gates             {}", c.gate_count);
                println!("vs ripple carry   {:.2}% faster", reduction * 100.0);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Smooth {
            configs,
            input,
            noise_sigma,
            kernel_sigma,
            scale_bits,
            seed,
            out_dir,
        } => {
            let original = match &input {
                Some(p) => pgm::read(File::open(p).with_context(|| format!("cannot open {}", p.display()))?)
                    .with_context(|| format!("reading {}", p.display()))?,
                None => test_image(),
            };
            let kernel = gaussian_kernel_int(DEFAULT_KERNEL_SIZE, kernel_sigma, scale_bits)?;
            // validate every config before any work
            for c in &configs {
                check_accumulator(&kernel, c).with_context(|| format!("config {c}"))?;
            }
            let dir = output_dir(out_dir)?;
            let noisy = add_noise(&original, noise_sigma, seed)?;
            let reference = convolve_reference(&noisy, &kernel);
            write_pgm(&dir.join("noisy.pgm"), &noisy)?;
            write_pgm(&dir.join("smoothed_reference.pgm"), &reference)?;
            let mut reports = Vec::new();
            for c in &configs {
                let out = convolve_approx(&noisy, &kernel, c)?;
                write_pgm(&dir.join(format!("smoothed_{}.pgm", config_tag(c))), &out)?;
                let r = QualityReport {
                    psnr: psnr(&reference, &out)?,
                    ssim: ssim(&reference, &out)?,
                    config: *c,
                    seed,
                };
                println!("{:<20} psnr {:>12}  ssim {:.4}", c.to_string(), r.psnr.to_string(), r.ssim);
                reports.push(r);
            }
            write_json(&dir.join("smooth_report.json"), &reports)?;
            eprintln!("wrote {}", dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Kmeans {
            configs,
            input,
            clusters,
            max_iter,
            seed,
            out_dir,
        } => {
            let data = match &input {
                Some(p) => parse_csv(File::open(p).with_context(|| format!("cannot open {}", p.display()))?)
                    .with_context(|| format!("reading {}", p.display()))?,
                None => bundled_dataset(),
            };
            let dir = output_dir(out_dir)?;
            let mut results = Vec::new();
            for c in &configs {
                let r = kmeans(&data, clusters, c, max_iter, seed)?;
                println!(
                    "{:<20} agreement {:.4}  iterations {:>3}  centroid distance {:.4}",
                    c.to_string(),
                    r.agreement,
                    r.iterations,
                    r.centroid_distance
                );
                results.push(r);
            }
            write_json(&dir.join("kmeans_report.json"), &results)?;
            eprintln!("wrote {}", dir.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn write_pgm(path: &std::path::Path, img: &cesa::apps::image::GrayImage) -> anyhow::Result<()> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    pgm::write(img, std::io::BufWriter::new(f))?;
    Ok(())
}

#[derive(Serialize)]
struct BoundaryRecord {
    index: u32,
    position: u32,
    estimated: bool,
    exact: bool,
    sel: Option<bool>,
}

#[derive(Serialize)]
struct AddRecord {
    config: AdderConfig,
    a: u64,
    b: u64,
    approx: u128,
    exact: u128,
    error_distance: u128,
    relative_error_distance: f64,
    boundaries: Vec<BoundaryRecord>,
}

fn add(config: &AdderConfig, a: u64, b: u64, json: bool) -> anyhow::Result<ExitCode> {
    let n = config.width();
    let wa = Word::new(a, n).context("operand a")?;
    let wb = Word::new(b, n).context("operand b")?;
    let approx = add_approx(wa, wb, config)?;
    let exact = add_exact(wa, wb, n)?;
    let k = config.block_size();
    let boundaries = approx
        .boundary_carries
        .iter()
        .enumerate()
        .map(|(i, &estimated)| {
            let i = i as u32;
            let inner = i < config.estimated_boundaries();
            Ok(BoundaryRecord {
                index: i,
                position: (i + 1) * k,
                estimated,
                exact: true_carry(a, b, (i + 1) * k),
                sel: inner
                    .then(|| estimate_block_carry(config.block_operands(a, b, i), config))
                    .transpose()?
                    .map(|s| s.sel),
            })
        })
        .collect::<Result<Vec<_>, cesa::AdderError>>()?;
    let record = AddRecord {
        config: *config,
        a,
        b,
        approx: approx.extended_value,
        exact: exact.extended_value,
        error_distance: error_distance(&approx, &exact),
        relative_error_distance: relative_error_distance(&approx, &exact),
        boundaries,
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&record)?);
        return Ok(ExitCode::SUCCESS);
    }
    println!("config  {config}");
    println!(
        "approx  {} (sum {}, carry-out {})",
        record.approx,
        approx.sum.value(),
        approx.carry_out as u8
    );
    println!("exact   {}", record.exact);
    println!("ed      {}", record.error_distance);
    println!("red     {}", record.relative_error_distance);
    for bd in &record.boundaries {
        let kind = if bd.sel.is_some() { "estimated" } else { "carry-out" };
        print!(
            "bit {:>2}  {kind} {}  exact {}",
            bd.position, bd.estimated as u8, bd.exact as u8
        );
        match bd.sel {
            Some(s) if config.variant() != Variant::Exact => println!("  sel {}", s as u8),
            _ => println!(),
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn verify(width: u32, json: bool) -> anyhow::Result<ExitCode> {
    let report = verify_width(width, Exec::default())?;
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        for o in &report.outcomes {
            match &o.counterexample {
                None => println!("PASS  {:<28} {:>12} checks", o.name, o.checked),
                Some(cx) => {
                    let cfg = cx.config.map(|c| c.to_string()).unwrap_or_default();
                    println!(
                        "FAIL  {:<28} {:>12} checks  {cfg} a={} b={}: {}",
                        o.name, o.checked, cx.a, cx.b, cx.detail
                    );
                }
            }
        }
        for s in &report.boundaries {
            println!(
                "{:<16} sel_active_fraction {:.4}  boundary mismatch {:.6}",
                s.config.to_string(),
                s.sel_active_fraction,
                s.overall_mismatch
            );
        }
    }
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
