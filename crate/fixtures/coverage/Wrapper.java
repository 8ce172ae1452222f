public abstract class Wrapper implements Shape {
    private Shape inner;
    private Shape backup;

    public void draw() {
        inner.draw();
    }

    public void resize(int factor) {
        inner.resize(factor);
    }
}
