//! Artifact output: RM2 matrices with geometry sidecars, PGM previews, and
//! CSV tables stamped with the config hash.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use tomo_core::projector::{geometry_from_sidecar, geometry_to_sidecar, AnyGeometry};
use tomo_core::Image2D;

/// An output directory for one experiment run.
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<OutDir> {
        let root = root.into();
        std::fs::create_dir_all(&root)
            .with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(OutDir { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Writes `<stem>.rm2` and a scaled `<stem>.pgm` preview.
    pub fn write_image(&self, stem: &str, img: &Image2D) -> Result<PathBuf> {
        let rm2 = self.path(&format!("{stem}.rm2"));
        img.write_rm2(&rm2)
            .with_context(|| format!("writing {}", rm2.display()))?;
        let pgm = self.path(&format!("{stem}.pgm"));
        img.write_pgm(&pgm)
            .with_context(|| format!("writing {}", pgm.display()))?;
        Ok(rm2)
    }

    /// Writes an image plus a geometry sidecar `<stem>.meta`.
    pub fn write_sinogram(&self, stem: &str, img: &Image2D, geom: &AnyGeometry) -> Result<PathBuf> {
        let rm2 = self.write_image(stem, img)?;
        let meta = self.path(&format!("{stem}.meta"));
        let text = geometry_to_sidecar(geom).context("serializing geometry sidecar")?;
        std::fs::write(&meta, text).with_context(|| format!("writing {}", meta.display()))?;
        Ok(rm2)
    }

    /// Writes a CSV with a header row; every data row is given the trailing
    /// `config_hash` column.
    pub fn write_csv(
        &self,
        name: &str,
        columns: &[&str],
        rows: &[Vec<String>],
        config_hash: &str,
    ) -> Result<PathBuf> {
        let path = self.path(name);
        let mut text = String::new();
        text.push_str(&columns.join(","));
        text.push_str(",config_hash\n");
        for row in rows {
            debug_assert_eq!(row.len(), columns.len());
            text.push_str(&row.join(","));
            text.push(',');
            text.push_str(config_hash);
            text.push('\n');
        }
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

/// Reads an RM2 matrix.
pub fn read_image(path: &Path) -> Result<Image2D> {
    Image2D::read_rm2(path).with_context(|| format!("reading {}", path.display()))
}

/// Reads an RM2 matrix together with its `.meta` geometry sidecar.
pub fn read_sinogram(path: &Path) -> Result<(Image2D, AnyGeometry)> {
    let img = read_image(path)?;
    let meta = path.with_extension("meta");
    let text = std::fs::read_to_string(&meta)
        .with_context(|| format!("reading geometry sidecar {}", meta.display()))?;
    let geom = geometry_from_sidecar(&text)
        .with_context(|| format!("parsing geometry sidecar {}", meta.display()))?;
    Ok((img, geom))
}

/// Copies the sidecar of `src` next to `dst` (both `.rm2` paths).
pub fn copy_sidecar(src: &Path, dst: &Path) -> Result<()> {
    let from = src.with_extension("meta");
    let to = dst.with_extension("meta");
    std::fs::copy(&from, &to)
        .with_context(|| format!("copying sidecar {} -> {}", from.display(), to.display()))?;
    Ok(())
}
